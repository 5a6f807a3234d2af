import numpy as np
import pytest

from scalelab.losses import LossSpec, ObjectiveContext, scaled_objective
from scalelab.optim import OptimizerHyper, gd_step
from scalelab.rng import SeededRng
from scalelab.sharpness import power_iteration_sharpness


def test_quadratic_lambda_recovered():
    est = power_iteration_sharpness(lambda th: 4.0 * th, np.array([1.0, 0.5]))
    assert est.converged
    assert est.lambda_max == pytest.approx(4.0, abs=1e-3)


def test_anisotropic_quadratic():
    lam = np.array([0.5, 3.0, 7.0])
    est = power_iteration_sharpness(lambda th: lam * th, np.zeros(3))
    assert est.lambda_max == pytest.approx(7.0, rel=1e-3)


def _gd_diverges(lam, eta, steps=200):
    theta = [np.array([1.0])]
    hyper = OptimizerHyper(eta=eta)
    for _ in range(steps):
        theta, _ = gd_step(theta, [lam * theta[0]], hyper)
    v = theta[0][0]
    return not np.isfinite(v) or abs(v) > 1.0


def test_gd_boundary_matches_two_over_lambda():
    lam = 4.0
    lo, hi = 0.01, 10.0
    assert not _gd_diverges(lam, lo) and _gd_diverges(lam, hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _gd_diverges(lam, mid):
            hi = mid
        else:
            lo = mid
    assert 0.5 * (lo + hi) == pytest.approx(2.0 / lam, rel=0.05)


def test_convergence_just_below_and_divergence_just_above():
    lam = 4.0
    assert not _gd_diverges(lam, 1.9 / lam, steps=300)
    assert _gd_diverges(lam, 2.1 / lam, steps=300)


def _linear_model_grad_fn(X, y, alpha, spec=LossSpec()):
    f0 = np.zeros((X.shape[0], 1))
    ctx = ObjectiveContext(alpha=alpha, initial_output=f0)

    def grad_fn(theta):
        f = (X @ theta)[:, None]
        _, dL_df = scaled_objective(f, ctx, y, spec)
        return X.T @ dL_df[:, 0]

    return grad_fn


def _linear_model_setup(seed=5, n=30, d=6):
    rng = SeededRng(seed)
    X = rng.gaussian(n, d)
    y = np.where(rng.gaussian(n, 1) > 0, 1.0, -1.0)
    return X, y


def test_linear_model_sharpness_matches_dense_hessian():
    X, y = _linear_model_setup()
    grad_fn = _linear_model_grad_fn(X, y, alpha=1.0)
    theta = np.zeros(X.shape[1])
    est = power_iteration_sharpness(grad_fn, theta, seed=1)
    assert est.converged
    # dense Hessian by finite differences of the gradient
    d = theta.size
    H = np.empty((d, d))
    step = 1e-6
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        H[:, k] = (grad_fn(theta + e) - grad_fn(theta - e)) / (2 * step)
    lam_dense = np.max(np.abs(np.linalg.eigvalsh(0.5 * (H + H.T))))
    assert est.lambda_max == pytest.approx(lam_dense, rel=0.01)


def test_linear_model_sharpness_alpha_invariant_at_init():
    # zero model curvature: the alpha^2 output scaling and alpha^-2 loss
    # scaling cancel exactly at the shifted origin
    X, y = _linear_model_setup(seed=7)
    theta = np.zeros(X.shape[1])
    values = {}
    for alpha in (1.0, 100.0):
        est = power_iteration_sharpness(_linear_model_grad_fn(X, y, alpha), theta, seed=1)
        values[alpha] = est.lambda_max
    assert values[100.0] == pytest.approx(values[1.0], rel=0.01)


def test_linear_model_sharpness_at_margin_point():
    # near the hinge margin the curvature is O(beta), unlike the flat origin
    X, y = _linear_model_setup(seed=9, n=40, d=5)
    grad_fn = _linear_model_grad_fn(X, y, alpha=1.0)
    theta_star, *_ = np.linalg.lstsq(X, y[:, 0], rcond=None)
    est = power_iteration_sharpness(grad_fn, theta_star, seed=2)
    assert est.converged
    assert est.lambda_max > 1e-3
    d = theta_star.size
    H = np.empty((d, d))
    step = 1e-6
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        H[:, k] = (grad_fn(theta_star + e) - grad_fn(theta_star - e)) / (2 * step)
    lam_dense = np.max(np.abs(np.linalg.eigvalsh(0.5 * (H + H.T))))
    assert est.lambda_max == pytest.approx(lam_dense, rel=0.01)


def test_zero_hessian():
    est = power_iteration_sharpness(lambda th: np.zeros_like(th), np.ones(4))
    assert est.lambda_max == 0.0
    assert est.converged


def test_nonconvergence_flagged():
    # rotation-like gradient field never settles the Rayleigh quotient
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    est = power_iteration_sharpness(lambda th: R @ th, np.zeros(2), max_iter=5)
    assert not est.converged
