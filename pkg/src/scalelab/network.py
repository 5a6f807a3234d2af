"""Two-layer fully connected network with hand-derived backward pass.

Forward:  preact = d^{-1/2} X W0^T,  hidden = sigma(preact),
          output = h^{-1/2} hidden W1^T.
No biases; samples are rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import ActivationSpec
from .rng import SeededRng


class ForwardError(FloatingPointError):
    """A forward stage produced a non-finite value."""

    def __init__(self, stage: str):
        super().__init__(f"non-finite value in forward stage '{stage}'")
        self.stage = stage


@dataclass
class ModelParams:
    """Weight matrices W0 (h x d) and W1 (c x h)."""

    w0: np.ndarray
    w1: np.ndarray

    def __post_init__(self):
        if self.w0.ndim != 2 or self.w1.ndim != 2:
            raise ValueError("weights must be 2-d")
        if self.w1.shape[1] != self.w0.shape[0]:
            raise ValueError(
                f"hidden width mismatch: W0 is {self.w0.shape}, W1 is {self.w1.shape}"
            )

    @property
    def d(self) -> int:
        return self.w0.shape[1]

    @property
    def h(self) -> int:
        return self.w0.shape[0]

    @property
    def c(self) -> int:
        return self.w1.shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [self.w0, self.w1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.w0.copy(), self.w1.copy())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w0.ravel(), self.w1.ravel()])

    def with_flat(self, theta: np.ndarray) -> "ModelParams":
        k = self.w0.size
        return ModelParams(
            theta[:k].reshape(self.w0.shape).copy(),
            theta[k:].reshape(self.w1.shape).copy(),
        )

    def equals_bitwise(self, other: "ModelParams") -> bool:
        return (
            self.w0.shape == other.w0.shape
            and self.w1.shape == other.w1.shape
            and np.array_equal(self.w0, other.w0)
            and np.array_equal(self.w1, other.w1)
        )


@dataclass
class ForwardTrace:
    preact: np.ndarray  # n x h
    hidden: np.ndarray  # n x h
    output: np.ndarray  # n x c


def init_params(rng: SeededRng, d: int, h: int, c: int) -> ModelParams:
    """Standard Gaussian init for both layers, no bias."""
    return ModelParams(rng.gaussian(h, d), rng.gaussian(c, h))


def forward(params: ModelParams, spec: ActivationSpec, inputs: np.ndarray) -> ForwardTrace:
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != params.d:
        raise ValueError(f"inputs must be n x {params.d}, got {inputs.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        preact = (inputs @ params.w0.T) / np.sqrt(params.d)
    if not np.all(np.isfinite(preact)):
        raise ForwardError("preact")
    hidden = spec.apply(preact)
    if not np.all(np.isfinite(hidden)):
        raise ForwardError("hidden")
    output = (hidden @ params.w1.T) / np.sqrt(params.h)
    if not np.all(np.isfinite(output)):
        raise ForwardError("output")
    return ForwardTrace(preact=preact, hidden=hidden, output=output)


def backward(
    params: ModelParams,
    spec: ActivationSpec,
    inputs: np.ndarray,
    trace: ForwardTrace,
    dL_df: np.ndarray,
) -> ModelParams:
    """Gradient of the scalar loss w.r.t. both weight matrices.

    `dL_df` is the loss gradient w.r.t. the raw output f (n x c); the trace
    must come from `forward` on the same inputs and params.
    """
    dL_df = np.asarray(dL_df, dtype=np.float64)
    n = inputs.shape[0]
    if dL_df.shape != (n, params.c):
        raise ValueError(f"dL_df must be {n} x {params.c}, got {dL_df.shape}")
    if trace.hidden.shape != (n, params.h):
        raise ValueError("trace does not match inputs/params")
    inv_sqrt_h = 1.0 / np.sqrt(params.h)
    inv_sqrt_d = 1.0 / np.sqrt(params.d)
    g_w1 = inv_sqrt_h * (dL_df.T @ trace.hidden)
    d_hidden = inv_sqrt_h * (dL_df @ params.w1)
    d_preact = d_hidden * spec.derivative(trace.preact)
    g_w0 = inv_sqrt_d * (d_preact.T @ inputs)
    return ModelParams(g_w0, g_w1)
