"""Scaled softplus activation and calibration of its output gain.

The activation is sigma(x) = (a / beta) * ln(1 + exp(beta * x)). The gain
`a` is calibrated so that a^2 * E[softplus_beta(Z)^2] = 1 for Z ~ N(0, 1),
which keeps the second moment of the next layer's preactivation at 1 under
standard-normal weights. The calibrated value comes from deterministic
quadrature; a Monte Carlo estimate is kept alongside as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import gaussian_expectation
from .rng import SeededRng


class CalibrationError(RuntimeError):
    """Quadrature and Monte Carlo gain estimates disagree."""


def softplus(x: np.ndarray) -> np.ndarray:
    """ln(1 + e^x), overflow-safe for |x| up to any float64 magnitude."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class ActivationSpec:
    """Scaled softplus with sharpness `beta_act` and calibrated gain `gain_a`."""

    beta_act: float = 5.0
    gain_a: float = 1.0

    def __post_init__(self):
        if self.beta_act <= 0:
            raise ValueError(f"beta_act must be positive, got {self.beta_act}")
        if self.gain_a <= 0:
            raise ValueError(f"gain_a must be positive, got {self.gain_a}")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (self.gain_a / self.beta_act) * softplus(self.beta_act * x)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        return self.gain_a * sigmoid(self.beta_act * x)


def second_moment_quadrature(beta_act: float, order: int = 200) -> float:
    """E[softplus_beta(Z)^2] with softplus_beta(x) = (1/beta) ln(1+e^{beta x})."""
    b = float(beta_act)
    return gaussian_expectation(lambda z: (softplus(b * z) / b) ** 2, order=order)


def second_moment_monte_carlo(beta_act: float, samples: int, rng: SeededRng) -> float:
    b = float(beta_act)
    total = 0.0
    chunk = 1_000_000
    remaining = int(samples)
    while remaining > 0:
        k = min(chunk, remaining)
        z = rng.gaussian(1, k)[0]
        total += float(np.sum((softplus(b * z) / b) ** 2))
        remaining -= k
    return total / samples


def calibrate_gain(
    beta_act: float,
    mc_samples: int = 0,
    rng: SeededRng | None = None,
    order: int = 200,
    mc_tolerance: float = 1e-3,
) -> tuple[ActivationSpec, dict]:
    """Gain a = E[softplus_beta(Z)^2]^{-1/2}, by quadrature.

    When `mc_samples` > 0 a Monte Carlo estimate is computed with `rng` and
    compared against the quadrature value; disagreement beyond
    `mc_tolerance` relative raises CalibrationError.
    """
    if beta_act <= 0:
        raise ValueError(f"beta_act must be positive, got {beta_act}")
    m2 = second_moment_quadrature(beta_act, order=order)
    gain = m2 ** -0.5
    info = {"second_moment": m2, "gain_quadrature": gain}
    if mc_samples > 0:
        if rng is None:
            raise ValueError("mc_samples > 0 requires an rng")
        m2_mc = second_moment_monte_carlo(beta_act, mc_samples, rng)
        gain_mc = m2_mc ** -0.5
        rel = abs(gain_mc - gain) / gain
        info.update({"gain_monte_carlo": gain_mc, "relative_gap": rel})
        if rel > mc_tolerance:
            raise CalibrationError(
                f"quadrature gain {gain:.8f} vs Monte Carlo {gain_mc:.8f} "
                f"(relative gap {rel:.2e} > {mc_tolerance:.0e})"
            )
    return ActivationSpec(beta_act=beta_act, gain_a=gain), info
