"""scalelab: interaction of output scaling with adaptive learning rates.

Implements plain and alpha-folded RMSProp/Adam step rules, the scaled
shifted soft-hinge objective, a two-layer network with a hand-derived
backward pass, dataset ingestion, and the (eta, alpha) sweep harness.
"""

__version__ = "0.1.0"

from .activations import ActivationSpec, calibrate_gain
from .data import Dataset, load_cifar10, load_idx, preprocess, synthetic_dataset
from .estimator import ScaledTwoLayerClassifier, SphereNormalizer
from .losses import LossSpec, ObjectiveContext, scaled_objective, soft_hinge
from .network import ForwardTrace, ModelParams, backward, forward, init_params
from .optim import (
    OptimizerHyper,
    OptimizerState,
    effective_lr_profile,
    find_alpha_star,
    gd_step,
    modified_adam_step,
    modified_rmsprop_step,
    rmsprop_step,
)
from .quadrature import gaussian_expectation
from .rng import SeededRng, derive_seed, gaussian_matrix
from .sharpness import estimate_sharpness, power_iteration_sharpness
from .sweep import SweepGrid, SweepSpec, ridge_slope, sweep
from .training import (
    TrainConfig,
    TrainReport,
    accuracy,
    detect_divergence,
    detect_frozen,
    hidden_consistency,
    train,
)
