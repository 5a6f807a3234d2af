"""Command-line front end: calibrate, train, sweep, gradcheck, report.

Every artifact directory gets a manifest recording the resolved config,
dataset checksums, and code version, so emitted grids are attributable to
their exact inputs. Exit status 0 covers diverged runs (divergence is
data); nonzero means usage, IO, or validation failure.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .activations import CalibrationError, calibrate_gain
from .config import ConfigError, RunSettings, load_settings
from .data import (
    Dataset,
    file_checksum,
    import_csv,
    load_cifar10,
    load_idx,
    preprocess,
    synthetic_dataset,
)
from .gradcheck import run_gradcheck
from .rng import SeededRng, derive_seed
from .sweep import (
    InsufficientDataError,
    SweepSpec,
    read_grid_csv,
    rows_to_fit_input,
    sweep,
    write_grid_csv,
    write_heatmap_pgm,
)
from .training import train

DATASET_DIR_ENV = "SCALELAB_DATASET_DIR"

IDX_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "eval": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class CliError(RuntimeError):
    pass


def _dataset_dir(args) -> Path:
    if args.dataset_dir:
        return Path(args.dataset_dir)
    env = os.environ.get(DATASET_DIR_ENV)
    if env:
        return Path(env)
    raise CliError(
        f"no dataset directory: pass --dataset-dir or set {DATASET_DIR_ENV}"
    )


def resolve_datasets(settings: RunSettings, args) -> tuple[Dataset, Dataset, dict]:
    """Build (train_set, eval_set, checksums) from the config's dataset block."""
    ds = settings.dataset
    kind = ds.get("dataset", "synthetic")
    checksums: dict[str, str] = {}
    if kind == "synthetic":
        n = ds.get("synthetic_n", 200)
        n_eval = ds.get("synthetic_eval_n", n)
        margin = ds.get("synthetic_margin", 8.0)
        seed = ds.get("synthetic_seed", 1)
        cfg = settings.train
        train_set = synthetic_dataset(n, cfg.d, cfg.c, margin, seed)
        eval_set = synthetic_dataset(n_eval, cfg.d, cfg.c, margin, derive_seed(seed, "eval"))
        eval_set.split = "eval"
        return train_set, eval_set, checksums
    if kind == "csv":
        for key in ("csv_train", "csv_eval"):
            if key not in ds:
                raise CliError(f"dataset=csv requires the {key} key")
        for key in ("csv_train", "csv_eval"):
            path = Path(ds[key])
            if not path.is_file():
                raise CliError(f"missing dataset file: {path}")
            checksums[str(path)] = file_checksum(path)
        train_set = import_csv(ds["csv_train"], c=settings.train.c, split="train")
        eval_set = import_csv(ds["csv_eval"], c=settings.train.c, split="eval")
        return train_set, eval_set, checksums
    if kind in ("mnist", "fashion_mnist", "cifar10"):
        root = _dataset_dir(args) / kind
        subsample = ds.get("subsample_n", 10_000)
        sub_seed = ds.get("subsample_seed", settings.train.seed)
        if kind == "cifar10":
            from .data import CIFAR_TEST_FILE, CIFAR_TRAIN_FILES

            for name in CIFAR_TRAIN_FILES + [CIFAR_TEST_FILE]:
                path = root / name
                if not path.is_file():
                    raise CliError(f"missing dataset file: {path}")
                checksums[str(path)] = file_checksum(path)
            tr_images, tr_labels = load_cifar10(root, "train")
            ev_images, ev_labels = load_cifar10(root, "eval")
        else:
            paths = [root / name for split in ("train", "eval") for name in IDX_FILES[split]]
            for path in paths:
                if not path.is_file():
                    raise CliError(f"missing dataset file: {path}")
                checksums[str(path)] = file_checksum(path)
            tr_images = load_idx(root / IDX_FILES["train"][0])
            tr_labels = load_idx(root / IDX_FILES["train"][1])
            ev_images = load_idx(root / IDX_FILES["eval"][0])
            ev_labels = load_idx(root / IDX_FILES["eval"][1])
        train_set = preprocess(
            tr_images, tr_labels, subsample_n=subsample, seed=sub_seed,
            split="train", c=settings.train.c, name=kind,
        )
        eval_set = preprocess(
            ev_images, ev_labels, split="eval", c=settings.train.c, name=kind
        )
        return train_set, eval_set, checksums
    raise CliError(f"unknown dataset kind {kind!r}")


def write_manifest(out_dir: Path, command: str, settings: RunSettings | None,
                   checksums: dict, extra: dict | None = None) -> None:
    lines = [
        f"command = {command}",
        f"version = {__version__}",
        f"timestamp = {datetime.datetime.now(datetime.timezone.utc).isoformat()}",
    ]
    if settings is not None:
        for key, value in sorted(settings.raw.items()):
            lines.append(f"config.{key} = {value}")
        for key, value in sorted(asdict(settings.train).items()):
            lines.append(f"resolved.{key} = {value}")
    for path, digest in sorted(checksums.items()):
        lines.append(f"sha256.{path} = {digest}")
    for key, value in sorted((extra or {}).items()):
        lines.append(f"{key} = {value}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _apply_overrides(settings: RunSettings, args) -> RunSettings:
    if args.seed is not None:
        settings.train = replace(settings.train, seed=args.seed)
    return settings


def cmd_calibrate(args) -> int:
    if args.beta <= 0:
        print(f"error: --beta must be positive, got {args.beta}", file=sys.stderr)
        return 2
    rng = SeededRng(args.seed if args.seed is not None else 0)
    spec, info = calibrate_gain(args.beta, mc_samples=args.samples, rng=rng)
    print(f"beta_act = {args.beta}")
    print(f"gain_quadrature = {spec.gain_a:.10f}")
    if args.samples:
        print(f"gain_monte_carlo = {info['gain_monte_carlo']:.10f}")
        print(f"relative_gap = {info['relative_gap']:.3e}")
    return 0


def cmd_train(args) -> int:
    settings = _apply_overrides(load_settings(args.config, allow_sweep=False), args)
    train_set, eval_set, checksums = resolve_datasets(settings, args)
    result = train(settings.train, train_set, eval_set)
    rep = result.report
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_lines = [
        f"train_accuracy = {rep.train_accuracy!r}",
        f"eval_accuracy = {rep.eval_accuracy!r}",
        f"consistency = {rep.consistency!r}",
        f"diverged = {int(rep.diverged)}",
        f"frozen = {int(rep.frozen)}",
        f"final_loss = {rep.final_loss!r}",
        f"steps_completed = {rep.steps_completed}",
    ]
    (out_dir / "report.txt").write_text("\n".join(report_lines) + "\n")
    write_manifest(out_dir, "train", settings, checksums)
    print("\n".join(report_lines))
    return 0


def cmd_sweep(args) -> int:
    settings = _apply_overrides(load_settings(args.config, allow_sweep=True), args)
    train_set, eval_set, checksums = resolve_datasets(settings, args)
    sw = settings.sweep
    spec = SweepSpec.log_spaced(
        (sw["eta_log10_min"], sw["eta_log10_max"]),
        sw["eta_count"],
        (sw["alpha_log10_min"], sw["alpha_log10_max"]),
        sw["alpha_count"],
        settings.train,
        shared_init=sw.get("shared_init", False),
    )
    grid = sweep(spec, train_set, eval_set, threads=args.threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_grid_csv(grid, out_dir / "grid.csv")
    write_heatmap_pgm(grid, "eval_accuracy", out_dir / "heatmap_eval_accuracy.pgm")
    write_heatmap_pgm(grid, "consistency", out_dir / "heatmap_consistency.pgm")
    write_manifest(
        out_dir,
        "sweep",
        settings,
        checksums,
        extra={
            "heatmap.shade_mapping": "value v in [0,1] -> round(254 v); diverged -> 255",
            "divergence_threshold_relative": settings.train.divergence_threshold,
            "grid.rows": len(spec.etas) * len(spec.alphas),
        },
    )
    print(f"wrote {len(spec.etas) * len(spec.alphas)} cells to {out_dir / 'grid.csv'}")
    return 0


def cmd_gradcheck(args) -> int:
    if args.d * args.h * args.c > 10_000:
        print(f"error: d*h*c = {args.d * args.h * args.c} exceeds the gradcheck cap 10000",
              file=sys.stderr)
        return 2
    result = run_gradcheck(
        instances=args.instances, seed=args.seed or 0,
        d=args.d, h=args.h, c=args.c, n=args.n, corrupt=args.corrupt_gradient,
    )
    print(f"max_relative_error = {result.max_rel_error:.3e} over {result.instances} instances")
    return 0 if result.max_rel_error < 1e-6 else 1


def cmd_report(args) -> int:
    rows = read_grid_csv(args.grid)
    fit = rows_to_fit_input(rows, accuracy_floor=args.floor)
    print("log10_alpha, log10_best_eta, best_eval_acc")
    for log_alpha, log_eta, acc in fit.points:
        print(f"{log_alpha:+.4f}, {log_eta:+.4f}, {acc:.4f}")
    print(f"ridge_slope = {fit.slope:.6f}")
    print(f"ridge_intercept = {fit.intercept:.6f}")
    if len(fit.points) >= 2:
        # largest change in local slope marks a candidate fold point
        xs = [p[0] for p in fit.points]
        ys = [p[1] for p in fit.points]
        local = np.diff(ys) / np.diff(xs)
        if len(local) >= 2:
            k = int(np.argmax(np.abs(np.diff(local))))
            print(f"fold_candidate_log10_alpha = {xs[k + 1]:+.4f}")
    if args.eta_slice is not None:
        target = float(np.log10(args.eta_slice))
        etas = sorted({r.log10_eta for r in rows})
        nearest = min(etas, key=lambda e: abs(e - target))
        print(f"slice_log10_eta = {nearest:+.4f}")
        print("log10_alpha, eval_acc, diverged")
        for r in sorted((r for r in rows if r.log10_eta == nearest),
                        key=lambda r: r.log10_alpha):
            print(f"{r.log10_alpha:+.4f}, {r.eval_acc:.4f}, {int(r.diverged)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scalelab",
        description="Output-scaling / adaptive-learning-rate experiment lab",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="sweep cell parallelism")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--dataset-dir", default=None,
                       help=f"dataset root (or set {DATASET_DIR_ENV})")

    p = sub.add_parser("calibrate", help="calibrate the activation gain")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo cross-check samples")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", help="single training run from a config file")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="(eta, alpha) grid sweep from a config file")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference check of the backward pass")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--h", type=int, default=4)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--corrupt-gradient", action="store_true",
                   help="test hook: corrupt the analytic gradient so the check must fail")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("report", help="ridge slope / fold / slices from a grid CSV")
    p.add_argument("--grid", required=True)
    p.add_argument("--floor", type=float, default=0.0, help="accuracy floor for ridge columns")
    p.add_argument("--eta-slice", type=float, default=None,
                   help="print the accuracy-vs-alpha slice at the nearest grid eta")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CliError, CalibrationError, InsufficientDataError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
