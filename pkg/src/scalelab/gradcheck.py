"""Finite-difference validation of the hand-derived backward pass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import ActivationSpec
from .data import synthetic_dataset
from .losses import LossSpec, ObjectiveContext, scaled_objective
from .network import ModelParams, backward, forward, init_params
from .rng import SeededRng


@dataclass
class GradCheckResult:
    max_rel_error: float
    instances: int


def instance_max_rel_error(
    d: int,
    h: int,
    c: int,
    n: int,
    seed: int,
    alpha: float = 1.0,
    fd_step: float = 1e-5,
    corrupt: bool = False,
) -> float:
    """Max relative error of the analytic gradient vs central differences.

    `corrupt` perturbs the analytic gradient; the check must then fail,
    which validates the check itself.
    """
    rng = SeededRng(seed)
    spec = ActivationSpec(beta_act=5.0, gain_a=1.3)
    loss_spec = LossSpec()
    params = init_params(rng, d, h, c)
    inputs = rng.gaussian(n, d)
    labels = -np.ones((n, c))
    labels[np.arange(n), np.arange(n) % c] = 1.0
    # shift against a fixed reference output so the objective is the trained one
    f0 = forward(init_params(rng, d, h, c), spec, inputs).output
    ctx = ObjectiveContext(alpha=alpha, initial_output=f0)

    def loss_at(theta: np.ndarray) -> float:
        model = params.with_flat(theta)
        out = forward(model, spec, inputs).output
        return scaled_objective(out, ctx, labels, loss_spec)[0]

    trace = forward(params, spec, inputs)
    _, dL_df = scaled_objective(trace.output, ctx, labels, loss_spec)
    analytic = backward(params, spec, inputs, trace, dL_df).flat()
    if corrupt:
        analytic = analytic.copy()
        analytic[0] += 1e-2 * (1.0 + abs(analytic[0]))

    theta = params.flat()
    numeric = np.empty_like(theta)
    for k in range(theta.size):
        step = np.zeros_like(theta)
        step[k] = fd_step
        numeric[k] = (loss_at(theta + step) - loss_at(theta - step)) / (2.0 * fd_step)
    denom = np.maximum(np.abs(analytic), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def run_gradcheck(
    instances: int = 20,
    seed: int = 0,
    d: int = 3,
    h: int = 4,
    c: int = 2,
    n: int = 5,
    corrupt: bool = False,
) -> GradCheckResult:
    if d * h * c > 10_000:
        raise ValueError(f"gradcheck dims too large: d*h*c = {d * h * c} > 10000")
    worst = 0.0
    for k in range(instances):
        err = instance_max_rel_error(d, h, c, n, seed=seed + k, corrupt=corrupt and k == 0)
        worst = max(worst, err)
    return GradCheckResult(max_rel_error=worst, instances=instances)
