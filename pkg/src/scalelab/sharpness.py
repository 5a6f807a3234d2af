"""Dominant Hessian eigenvalue by power iteration on finite-difference
Hessian-vector products.

The learning-rate stability condition for plain gradient descent is
eta < 2 / lambda_max, so the probe reports the largest eigenvalue of the
training-loss Hessian at a given parameter point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .activations import ActivationSpec
from .data import Dataset
from .losses import LossSpec, ObjectiveContext, scaled_objective
from .network import ModelParams, backward, forward
from .rng import SeededRng


@dataclass
class SharpnessEstimate:
    lambda_max: float
    iterations: int
    converged: bool


def power_iteration_sharpness(
    grad_fn: Callable[[np.ndarray], np.ndarray],
    theta: np.ndarray,
    seed: int = 0,
    tol: float = 1e-4,
    max_iter: int = 200,
    fd_step: float = 1e-5,
) -> SharpnessEstimate:
    """Largest-magnitude Hessian eigenvalue of a loss with gradient `grad_fn`.

    Hv is computed by central differences of the gradient:
    Hv ~ (g(theta + delta v) - g(theta - delta v)) / (2 delta), with delta
    scaled to the parameter magnitude.
    """
    theta = np.asarray(theta, dtype=np.float64)
    delta = fd_step * (1.0 + float(np.linalg.norm(theta)))

    def hvp(v: np.ndarray) -> np.ndarray:
        return (grad_fn(theta + delta * v) - grad_fn(theta - delta * v)) / (2.0 * delta)

    v = SeededRng(seed).gaussian(1, theta.size)[0]
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    for it in range(1, max_iter + 1):
        hv = hvp(v)
        new_rayleigh = float(v @ hv)
        norm = np.linalg.norm(hv)
        if norm == 0.0:
            return SharpnessEstimate(0.0, it, True)
        v = hv / norm
        if it > 1 and abs(new_rayleigh - rayleigh) <= tol * max(abs(new_rayleigh), 1e-30):
            return SharpnessEstimate(new_rayleigh, it, True)
        rayleigh = new_rayleigh
    return SharpnessEstimate(rayleigh, max_iter, False)


def estimate_sharpness(
    params: ModelParams,
    activation: ActivationSpec,
    dataset: Dataset,
    ctx: ObjectiveContext,
    loss_spec: LossSpec,
    seed: int = 0,
    tol: float = 1e-4,
    max_iter: int = 200,
) -> SharpnessEstimate:
    """lambda_max of the scaled-objective Hessian at `params`."""
    template = params

    def grad_fn(theta: np.ndarray) -> np.ndarray:
        model = template.with_flat(theta)
        trace = forward(model, activation, dataset.inputs)
        _, dL_df = scaled_objective(trace.output, ctx, dataset.labels, loss_spec)
        return backward(model, activation, dataset.inputs, trace, dL_df).flat()

    return power_iteration_sharpness(
        grad_fn, params.flat(), seed=seed, tol=tol, max_iter=max_iter
    )
