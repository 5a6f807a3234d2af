"""scikit-learn style wrappers: a sphere-normalizing transformer and a
two-layer classifier trained with the alpha-scaled shifted objective.

These exist so the trainer composes with pipelines, grid search, and the
rest of the sklearn ecosystem; the experiment engine uses the functional
API in `training` directly.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .activations import ActivationSpec
from .data import Dataset, encode_labels, sphere_normalize
from .network import forward
from .training import OPTIMIZERS, TrainConfig, train


class SphereNormalizer(TransformerMixin, BaseEstimator):
    """Scale each sample so that sum(x_i^2) equals the feature count."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = check_array(X, dtype=np.float64)
        normalized, _ = sphere_normalize(X)
        return normalized


class ScaledTwoLayerClassifier(ClassifierMixin, BaseEstimator):
    """Two-layer net trained full-batch on the scaled shifted soft-hinge loss.

    Parameters mirror the training configuration: `alpha` is the output
    scaling factor, `optimizer` one of 'gd', 'rmsprop', 'modified_rmsprop',
    'modified_adam'. Predictions use the shifted output f - f(theta0).
    """

    def __init__(
        self,
        alpha=1.0,
        eta=0.1,
        optimizer="gd",
        steps=500,
        hidden_width=100,
        rho=0.999,
        epsilon=1e-8,
        beta_act=5.0,
        beta_loss=20.0,
        class_aggregation="sum",
        divergence_threshold=1e6,
        random_state=0,
    ):
        self.alpha = alpha
        self.eta = eta
        self.optimizer = optimizer
        self.steps = steps
        self.hidden_width = hidden_width
        self.rho = rho
        self.epsilon = epsilon
        self.beta_act = beta_act
        self.beta_loss = beta_loss
        self.class_aggregation = class_aggregation
        self.divergence_threshold = divergence_threshold
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes")
        self.n_features_in_ = X.shape[1]
        config = TrainConfig(
            alpha=self.alpha,
            eta=self.eta,
            optimizer=self.optimizer,
            steps=self.steps,
            seed=self.random_state,
            d=X.shape[1],
            h=self.hidden_width,
            c=len(self.classes_),
            rho=self.rho,
            epsilon=self.epsilon,
            beta_act=self.beta_act,
            beta_loss=self.beta_loss,
            class_aggregation=self.class_aggregation,
            divergence_threshold=self.divergence_threshold,
        )
        train_set = Dataset(
            inputs=X,
            labels=encode_labels(y_idx, len(self.classes_)),
            name="fit",
            split="train",
        )
        result = train(config, train_set)
        self.params_ = result.params
        self.initial_params_ = result.initial_params
        self.activation_ = result.activation
        self.report_ = result.report
        return self

    def decision_function(self, X):
        if not hasattr(self, "params_"):
            raise NotFittedError("fit must be called before prediction")
        X = check_array(X, dtype=np.float64)
        f = forward(self.params_, self.activation_, X).output
        f0 = forward(self.initial_params_, self.activation_, X).output
        return f - f0

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]
