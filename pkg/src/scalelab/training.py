"""Full-batch trainer, metrics, and divergence / frozen-parameter detection.

A run initializes both layers from the seed, freezes the initial output
f(theta0, x), then performs a fixed budget of full-batch steps of the
configured optimizer on the scaled shifted objective. Divergence and frozen
parameters are recorded outcomes, never exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .activations import ActivationSpec, calibrate_gain
from .data import Dataset
from .losses import LossSpec, ObjectiveContext, scaled_objective
from .network import ForwardError, ModelParams, backward, forward, init_params
from .optim import (
    OptimizerHyper,
    OptimizerState,
    gd_step,
    modified_adam_step,
    modified_rmsprop_step,
    rmsprop_step,
)
from .rng import SeededRng

OPTIMIZERS = ("gd", "rmsprop", "modified_rmsprop", "modified_adam")


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 1.0
    eta: float = 0.1
    optimizer: str = "gd"
    steps: int = 5000
    seed: int = 0
    d: int = 784
    h: int = 1000
    c: int = 10
    rho: float = 0.999
    epsilon: float = 1e-8
    beta_act: float = 5.0
    beta_loss: float = 20.0
    beta1: float = 0.9
    class_aggregation: str = "sum"
    divergence_threshold: float = 1e6  # relative to the initial loss
    record_every: int = 10

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}; choose from {OPTIMIZERS}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        for name in ("alpha", "rho", "epsilon", "beta_act", "beta_loss",
                     "divergence_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class TrainReport:
    train_accuracy: float
    eval_accuracy: float
    consistency: float
    diverged: bool
    frozen: bool
    final_loss: float
    loss_trace: list
    steps_completed: int


@dataclass
class TrainResult:
    report: TrainReport
    params: ModelParams
    initial_params: ModelParams
    activation: ActivationSpec


def accuracy(outputs: np.ndarray, labels: np.ndarray) -> float:
    """Top-1 accuracy; argmax ties break to the lowest class index."""
    if outputs.shape != labels.shape:
        raise ValueError(f"shape mismatch: {outputs.shape} vs {labels.shape}")
    predicted = np.argmax(outputs, axis=1)
    truth = np.argmax(labels, axis=1)
    return float(np.mean(predicted == truth))


def hidden_consistency(
    theta0: ModelParams,
    theta: ModelParams,
    spec: ActivationSpec,
    eval_inputs: np.ndarray,
) -> float:
    """Fraction of (sample, neuron) preactivation pairs with matching sign.

    sign(0) agrees only with sign(0).
    """
    z0 = np.sign(forward(theta0, spec, eval_inputs).preact)
    z1 = np.sign(forward(theta, spec, eval_inputs).preact)
    return float(np.mean(z0 == z1))


def detect_divergence(loss: float, threshold: float) -> bool:
    return not np.isfinite(loss) or loss > threshold


def detect_frozen(theta0: ModelParams, theta: ModelParams) -> bool:
    """True iff every coordinate is bitwise equal to its initial value."""
    return theta.equals_bitwise(theta0)


def _eval_outputs(params, theta0, spec, inputs, initial_output=None):
    """Shifted outputs f - f0 used for prediction (alpha > 0 preserves argmax)."""
    if initial_output is None:
        initial_output = forward(theta0, spec, inputs).output
    return forward(params, spec, inputs).output - initial_output


def train(
    config: TrainConfig,
    train_set: Dataset,
    eval_set: Dataset | None = None,
    activation: ActivationSpec | None = None,
    initial_params: ModelParams | None = None,
) -> TrainResult:
    """Run the full fixed-budget training protocol and collect metrics.

    `activation` may be passed to reuse a calibrated gain across runs;
    `initial_params` overrides the seeded init (shared-theta0 sweep mode).
    """
    if train_set.d != config.d or train_set.c != config.c:
        raise ValueError(
            f"dataset is {train_set.d}-dim / {train_set.c}-class but config says "
            f"d={config.d}, c={config.c}"
        )
    if eval_set is None:
        eval_set = train_set
    if activation is None:
        activation = calibrate_gain(config.beta_act)[0]
    loss_spec = LossSpec(beta_loss=config.beta_loss, class_aggregation=config.class_aggregation)
    hyper = OptimizerHyper(
        eta=config.eta, rho=config.rho, epsilon=config.epsilon, alpha=config.alpha
    )

    rng = SeededRng(config.seed)
    theta0 = initial_params.copy() if initial_params is not None else init_params(
        rng, config.d, config.h, config.c
    )
    ctx = ObjectiveContext(
        alpha=config.alpha, initial_output=forward(theta0, activation, train_set.inputs).output
    )
    eval_f0 = forward(theta0, activation, eval_set.inputs).output

    params = theta0.arrays()
    params = [p.copy() for p in params]
    state = OptimizerState.zeros_like(params, with_momentum=config.optimizer == "modified_adam")

    initial_loss = None
    last_loss = np.nan
    loss_trace: list[tuple[int, float]] = []
    diverged = False
    steps_completed = 0
    last_good = [p.copy() for p in params]

    for t in range(config.steps):
        model = ModelParams(params[0], params[1])
        try:
            trace = forward(model, activation, train_set.inputs)
            loss, dL_df = scaled_objective(trace.output, ctx, train_set.labels, loss_spec)
        except ForwardError:
            diverged = True
            break
        if initial_loss is None:
            initial_loss = loss
        if t % config.record_every == 0:
            loss_trace.append((t, loss))
        if detect_divergence(loss, config.divergence_threshold * max(initial_loss, 1e-300)):
            last_loss = loss
            diverged = True
            break
        last_loss = loss
        last_good = [p.copy() for p in params]

        grad = backward(model, activation, train_set.inputs, trace, dL_df).arrays()
        if config.optimizer == "gd":
            params, diag = gd_step(params, grad, hyper)
        elif config.optimizer == "rmsprop":
            params, state, diag = rmsprop_step(params, grad, state, hyper)
        elif config.optimizer == "modified_rmsprop":
            params, state, diag = modified_rmsprop_step(params, grad, state, hyper)
        else:
            params, state, diag = modified_adam_step(
                params, grad, state, hyper, beta1=config.beta1
            )
        steps_completed = t + 1
        if not diag.finite:
            diverged = True
            break

    if diverged:
        params = last_good  # metrics come from the last finite state
    final = ModelParams(params[0], params[1])
    if not diverged:
        try:
            out = forward(final, activation, train_set.inputs).output
            last_loss, _ = scaled_objective(out, ctx, train_set.labels, loss_spec)
            if detect_divergence(last_loss, config.divergence_threshold * max(initial_loss, 1e-300)):
                diverged = True
        except ForwardError:
            diverged = True
            params = last_good
            final = ModelParams(params[0], params[1])

    frozen = detect_frozen(theta0, final)
    train_out = _eval_outputs(final, theta0, activation, train_set.inputs,
                              initial_output=ctx.initial_output)
    eval_out = _eval_outputs(final, theta0, activation, eval_set.inputs,
                             initial_output=eval_f0)
    report = TrainReport(
        train_accuracy=accuracy(train_out, train_set.labels),
        eval_accuracy=accuracy(eval_out, eval_set.labels),
        consistency=hidden_consistency(theta0, final, activation, eval_set.inputs),
        diverged=diverged,
        frozen=frozen,
        final_loss=float(last_loss),
        loss_trace=loss_trace,
        steps_completed=steps_completed,
    )
    return TrainResult(report=report, params=final, initial_params=theta0, activation=activation)
