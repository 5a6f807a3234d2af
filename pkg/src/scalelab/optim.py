"""Step rules: simple gradient descent, RMSProp, alpha-folded RMSProp and
Adam, plus effective-learning-rate diagnostics.

All step functions are pure: they take parameter/gradient arrays (a list of
ndarrays, one per weight block) and an optimizer state, and return new
values. The second-moment accumulator is updated before the step, matching
the pseudocode ordering of the folded variant, so the folded rule with
alpha = 1 is bitwise identical to plain RMSProp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Arrays = list


@dataclass(frozen=True)
class OptimizerHyper:
    eta: float
    rho: float = 0.999
    epsilon: float = 1e-8
    alpha: float = 1.0

    def __post_init__(self):
        if self.eta < 0:
            # eta == 0 is allowed: it produces a frozen run, which is data
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass
class OptimizerState:
    v: Arrays  # second-moment accumulator, init zeros
    m: Arrays | None = None  # first moment (Adam only)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Arrays, with_momentum: bool = False) -> "OptimizerState":
        return cls(
            v=[np.zeros_like(p) for p in params],
            m=[np.zeros_like(p) for p in params] if with_momentum else None,
            t=0,
        )


@dataclass
class StepDiagnostics:
    effective_lr: Arrays
    update_norm: float
    grad_norm: float
    finite: bool = True


def _norm(arrays: Arrays) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.sqrt(sum(float(np.sum(a * a)) for a in arrays)))


def _finite(arrays: Arrays) -> bool:
    return all(np.all(np.isfinite(a)) for a in arrays)


def gd_step(params: Arrays, grad: Arrays, hyper: OptimizerHyper):
    """theta <- theta - eta * G."""
    with np.errstate(over="ignore", invalid="ignore"):
        updates = [hyper.eta * g for g in grad]
        new_params = [p - u for p, u in zip(params, updates)]
    diag = StepDiagnostics(
        effective_lr=[np.full_like(p, hyper.eta) for p in params],
        update_norm=_norm(updates),
        grad_norm=_norm(grad),
        finite=_finite(new_params),
    )
    return new_params, diag


def _second_moment_step(params, grad, state, hyper, fold_alpha: float):
    """Shared v-update + step for the plain and folded RMSProp rules."""
    new_v = [
        hyper.rho * v + (1.0 - hyper.rho) * (fold_alpha * g) ** 2
        for v, g in zip(state.v, grad)
    ]
    eff = [hyper.eta / (np.sqrt(v) + hyper.epsilon) for v in new_v]
    updates = [e * g for e, g in zip(eff, grad)]
    new_params = [p - u for p, u in zip(params, updates)]
    new_state = OptimizerState(v=new_v, m=None, t=state.t + 1)
    diag = StepDiagnostics(
        effective_lr=eff,
        update_norm=_norm(updates),
        grad_norm=_norm(grad),
        finite=_finite(new_params),
    )
    return new_params, new_state, diag


def rmsprop_step(params: Arrays, grad: Arrays, state: OptimizerState, hyper: OptimizerHyper):
    """v <- rho v + (1 - rho) G^2;  theta <- theta - eta G / (sqrt(v) + eps)."""
    return _second_moment_step(params, grad, state, hyper, fold_alpha=1.0)


def modified_rmsprop_step(params: Arrays, grad: Arrays, state: OptimizerState, hyper: OptimizerHyper):
    """Folded accumulator: v <- rho v + (1 - rho) (alpha G)^2, step unchanged.

    Makes the effective learning rate independent of the output scaling
    because the raw gradient magnitude is O(1/alpha).
    """
    return _second_moment_step(params, grad, state, hyper, fold_alpha=hyper.alpha)


def modified_adam_step(
    params: Arrays,
    grad: Arrays,
    state: OptimizerState,
    hyper: OptimizerHyper,
    beta1: float = 0.9,
    bias_correction: bool = True,
):
    """Adam with the alpha-folded second moment; first moment is not folded."""
    if not 0.0 <= beta1 < 1.0:
        raise ValueError(f"beta1 must be in [0, 1), got {beta1}")
    if state.m is None:
        raise ValueError("Adam needs a state with a first moment (with_momentum=True)")
    t = state.t + 1
    new_m = [beta1 * m + (1.0 - beta1) * g for m, g in zip(state.m, grad)]
    new_v = [
        hyper.rho * v + (1.0 - hyper.rho) * (hyper.alpha * g) ** 2
        for v, g in zip(state.v, grad)
    ]
    if bias_correction:
        m_hat = [m / (1.0 - beta1 ** t) for m in new_m]
        v_hat = [v / (1.0 - hyper.rho ** t) for v in new_v]
    else:
        m_hat, v_hat = new_m, new_v
    eff = [hyper.eta / (np.sqrt(v) + hyper.epsilon) for v in v_hat]
    updates = [e * m for e, m in zip(eff, m_hat)]
    new_params = [p - u for p, u in zip(params, updates)]
    new_state = OptimizerState(v=new_v, m=new_m, t=t)
    diag = StepDiagnostics(
        effective_lr=eff,
        update_norm=_norm(updates),
        grad_norm=_norm(grad),
        finite=_finite(new_params),
    )
    return new_params, new_state, diag


def effective_lr_profile(
    gradient_magnitude: float,
    hyper: OptimizerHyper,
    steps: int,
    folded: bool,
) -> np.ndarray:
    """eta / (sqrt(v_t) + eps) per step under a constant gradient G = g / alpha.

    `gradient_magnitude` is the alpha-independent scale g; the raw gradient
    fed to the accumulator is g / alpha, mirroring the O(1/alpha) scaling of
    the shifted objective's gradients. With folding the profile is
    alpha-independent; without it the profile degenerates to eta / eps for
    alpha far above the crossover g / eps.
    """
    if gradient_magnitude <= 0:
        raise ValueError("gradient_magnitude must be positive")
    g_raw = gradient_magnitude / hyper.alpha
    g_acc = (hyper.alpha if folded else 1.0) * g_raw
    v = 0.0
    out = np.empty(steps, dtype=np.float64)
    for t in range(steps):
        v = hyper.rho * v + (1.0 - hyper.rho) * g_acc * g_acc
        out[t] = hyper.eta / (np.sqrt(v) + hyper.epsilon)
    return out


def find_alpha_star(
    gradient_magnitude: float,
    hyper: OptimizerHyper,
    steps: int = 20000,
    lo: float = 1e-12,
    hi: float = 1e12,
) -> float:
    """Crossover alpha where sqrt(v_steady) = eps under the unfolded rule.

    Located by bisection on the simulated profile; analytically g / eps.
    """
    def sqrt_v_minus_eps(alpha: float) -> float:
        h = OptimizerHyper(eta=hyper.eta, rho=hyper.rho, epsilon=hyper.epsilon, alpha=alpha)
        g_raw = gradient_magnitude / alpha
        v = (1.0 - h.rho ** steps) * g_raw * g_raw
        return np.sqrt(v) - h.epsilon

    if sqrt_v_minus_eps(lo) < 0 or sqrt_v_minus_eps(hi) > 0:
        raise ValueError("alpha* does not lie in the bracket")
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if sqrt_v_minus_eps(mid) > 0:
            lo = mid
        else:
            hi = mid
    return float(np.sqrt(lo * hi))
