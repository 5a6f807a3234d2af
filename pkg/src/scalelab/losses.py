"""Soft hinge loss and the alpha-scaled, initial-prediction-shifted objective.

The training objective is

    L(theta) = 1 / (alpha^2 n) * sum over samples of
               reduce over classes of hinge(alpha * (f - f0), y)

with hinge(s, y) = (1/beta) ln(1 + exp(beta (1 - s y))). The gradient is
returned with respect to the raw output f, absorbing the chain through
alpha and the 1/alpha^2 prefactor, so the optimizer sees the G_t whose
first-step magnitude scales like 1/alpha.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import sigmoid, softplus


@dataclass(frozen=True)
class LossSpec:
    beta_loss: float = 20.0
    class_aggregation: str = "sum"  # sum matches the one-vs-all hinge construction

    def __post_init__(self):
        if self.beta_loss <= 0:
            raise ValueError(f"beta_loss must be positive, got {self.beta_loss}")
        if self.class_aggregation not in ("sum", "mean"):
            raise ValueError(f"unknown class_aggregation {self.class_aggregation!r}")


@dataclass
class ObjectiveContext:
    """Per-run alpha and the frozen initial output f(theta0, x)."""

    alpha: float
    initial_output: np.ndarray  # n x c
    n: int = field(init=False)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        self.initial_output = np.asarray(self.initial_output, dtype=np.float64)
        self.initial_output.setflags(write=False)
        self.n = self.initial_output.shape[0]


def soft_hinge(f, y, beta_loss: float):
    """Per-element soft hinge loss and its derivative w.r.t. f.

    Returns (loss, dloss_df) where loss = (1/beta) ln(1 + e^{beta (1 - f y)})
    and dloss_df = -y * sigmoid(beta (1 - f y)), both overflow-safe.
    """
    f = np.asarray(f, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    margin = beta_loss * (1.0 - f * y)
    loss = softplus(margin) / beta_loss
    dloss_df = -y * sigmoid(margin)
    return loss, dloss_df


def scaled_objective(
    output: np.ndarray,
    ctx: ObjectiveContext,
    labels: np.ndarray,
    spec: LossSpec,
):
    """Scalar loss and its gradient w.r.t. the raw output f (n x c)."""
    output = np.asarray(output, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if output.shape != ctx.initial_output.shape or output.shape != labels.shape:
        raise ValueError(
            f"shape mismatch: output {output.shape}, initial {ctx.initial_output.shape}, "
            f"labels {labels.shape}"
        )
    alpha = ctx.alpha
    shifted = alpha * (output - ctx.initial_output)
    elem_loss, elem_grad = soft_hinge(shifted, labels, spec.beta_loss)
    scale = 1.0 / (alpha * alpha * ctx.n)
    if spec.class_aggregation == "mean":
        scale /= output.shape[1]
    loss = scale * float(np.sum(elem_loss))
    # d/df of hinge(alpha (f - f0)) contributes an extra factor alpha
    dL_df = (scale * alpha) * elem_grad
    return loss, dL_df
