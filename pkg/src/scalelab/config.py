"""Flat key=value config files for single runs and sweeps.

The format is deliberately strict: one `key = value` pair per line, `#`
comments, and unknown keys are errors, because a silently ignored typo in
an eta/alpha grid would corrupt an experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .training import OPTIMIZERS, TrainConfig


class ConfigError(ValueError):
    pass


def parse_flat(text: str) -> dict:
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {line_no}: empty key")
        if key in out:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        out[key] = value
    return out


def _convert(key: str, value: str, kind):
    try:
        if kind is bool:
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        return kind(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {value!r} as {kind.__name__}") from None


_TRAIN_KEYS = {
    "alpha": float,
    "eta": float,
    "optimizer": str,
    "steps": int,
    "seed": int,
    "d": int,
    "h": int,
    "c": int,
    "rho": float,
    "epsilon": float,
    "beta_act": float,
    "beta_loss": float,
    "beta1": float,
    "class_aggregation": str,
    "divergence_threshold": float,
    "record_every": int,
}

_DATASET_KEYS = {
    "dataset": str,  # synthetic | mnist | fashion_mnist | cifar10 | csv
    "subsample_n": int,
    "subsample_seed": int,
    "synthetic_n": int,
    "synthetic_eval_n": int,
    "synthetic_margin": float,
    "synthetic_seed": int,
    "csv_train": str,
    "csv_eval": str,
}

_SWEEP_KEYS = {
    "eta_log10_min": float,
    "eta_log10_max": float,
    "eta_count": int,
    "alpha_log10_min": float,
    "alpha_log10_max": float,
    "alpha_count": int,
    "shared_init": bool,
    "accuracy_floor": float,
}


@dataclass
class RunSettings:
    """A parsed config: the base TrainConfig plus dataset and sweep blocks."""

    train: TrainConfig
    dataset: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def load_settings(path, allow_sweep: bool) -> RunSettings:
    pairs = parse_flat(Path(path).read_text())
    allowed = dict(_TRAIN_KEYS)
    allowed.update(_DATASET_KEYS)
    if allow_sweep:
        allowed.update(_SWEEP_KEYS)
    unknown = sorted(set(pairs) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    train_kwargs = {
        k: _convert(k, v, _TRAIN_KEYS[k]) for k, v in pairs.items() if k in _TRAIN_KEYS
    }
    if train_kwargs.get("optimizer") not in (None, *OPTIMIZERS):
        raise ConfigError(
            f"optimizer must be one of {OPTIMIZERS}, got {train_kwargs['optimizer']!r}"
        )
    try:
        train = TrainConfig(**train_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    dataset = {k: _convert(k, v, _DATASET_KEYS[k]) for k, v in pairs.items() if k in _DATASET_KEYS}
    sweep = {k: _convert(k, v, _SWEEP_KEYS[k]) for k, v in pairs.items() if k in _SWEEP_KEYS}
    if allow_sweep:
        missing = [
            k
            for k in ("eta_log10_min", "eta_log10_max", "eta_count",
                      "alpha_log10_min", "alpha_log10_max", "alpha_count")
            if k not in sweep
        ]
        if missing:
            raise ConfigError(f"sweep config missing keys: {', '.join(missing)}")
    return RunSettings(train=train, dataset=dataset, sweep=sweep, raw=dict(pairs))
