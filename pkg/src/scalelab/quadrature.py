"""Gauss-Hermite quadrature for expectations under the standard normal."""

from __future__ import annotations

from typing import Callable

import numpy as np


class UnstableIntegrandError(ValueError):
    """The integrand produced a non-finite value at a quadrature node."""


def gaussian_expectation(g: Callable[[np.ndarray], np.ndarray], order: int = 200) -> float:
    """E[g(Z)] for Z ~ N(0, 1) by Gauss-Hermite quadrature.

    Exact for polynomials of degree <= 2*order - 1. `g` must be vectorized
    over a 1-d array of real nodes.
    """
    if order < 2:
        raise ValueError(f"quadrature order must be >= 2, got {order}")
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    # change of variables z = sqrt(2) x, weights normalized by 1/sqrt(pi)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        values = np.asarray(g(np.sqrt(2.0) * nodes), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise UnstableIntegrandError("integrand is non-finite at a quadrature node")
    return float(np.sum(weights * values) / np.sqrt(np.pi))
