"""Scikit-learn style regressors wrapping the predictor families.

Each estimator fits one-step-ahead predictors on lagged sample windows
(rows oldest-to-newest) and exposes the usual fit/predict/get_params
surface, so the families drop into sklearn pipelines and grid searches.
The codec uses these same estimators for its per-frame retraining; the
``predict_one``/``step`` methods are the streaming entry points it
calls once per sample.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .defaults import (
    COMMITTEE_SIZE,
    ELMAN_HIDDEN_UNITS,
    MLP_HIDDEN_UNITS,
    RBF_ERROR_GOAL,
    RBF_MAX_NEURONS,
    RBF_SPREAD,
)
from .predictors import FAMILY_ELMAN, FAMILY_MLP, mlp_predict_batch, rbf_predict_batch
from .training import TrainSet, rbf_train_greedy, train_committee


def check_window_matrix(X, n_features=None) -> np.ndarray:
    """Validate a 2-D finite float matrix of lagged sample windows."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D window matrix, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"window matrix must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("window matrix contains non-finite values")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def check_regression_targets(y, n_rows) -> np.ndarray:
    """Validate a finite 1-D target vector matching the window count."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError(f"expected a 1-D target vector, got shape {y.shape}")
    if len(y) != n_rows:
        raise ValueError(f"X has {n_rows} rows but y has {len(y)}")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets contain non-finite values")
    return y


def _require_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(
            f"{type(est).__name__} is not fitted yet; call fit(X, y) first"
        )


class MlpCommitteeRegressor(BaseEstimator, RegressorMixin):
    """Committee of sigmoid-hidden-layer nets trained from random restarts.

    Parameters mirror the codec's per-frame training: ``seed`` and
    ``frame_index`` pin the member initializations, so two fits with
    identical inputs produce bit-identical committees.
    """

    _family = FAMILY_MLP

    def __init__(self, n_members=COMMITTEE_SIZE, hidden_units=MLP_HIDDEN_UNITS,
                 epochs=6, seed=0, frame_index=0):
        self.n_members = n_members
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.seed = seed
        self.frame_index = frame_index

    def fit(self, X, y):
        X = check_window_matrix(X)
        y = check_regression_targets(y, len(X))
        self.members_ = train_committee(
            self._family, TrainSet(X, y), epochs=self.epochs, seed=self.seed,
            frame_index=self.frame_index, n_members=self.n_members,
            hidden_units=self.hidden_units)
        self.n_features_in_ = X.shape[1]
        self._stack()
        return self

    def _stack(self):
        self._w1 = np.stack([n.w1 for n in self.members_])
        self._b1 = np.stack([n.b1 for n in self.members_])
        self._w2 = np.stack([n.w2 for n in self.members_])
        self._b2 = np.array([n.b2 for n in self.members_])

    def predict(self, X):
        _require_fitted(self, "members_")
        X = check_window_matrix(X, self.n_features_in_)
        outputs = np.stack([mlp_predict_batch(n, X) for n in self.members_])
        return outputs.mean(axis=0)

    def predict_one(self, x) -> float:
        """Committee mean for a single window; used in the codec loop."""
        _require_fitted(self, "members_")
        h = np.tanh(self._w1 @ x + self._b1)  # (members, hidden)
        y = (self._w2 * h).sum(axis=1) + self._b2
        return float(y.mean())


class ElmanCommitteeRegressor(BaseEstimator, RegressorMixin):
    """Committee of recurrent-first-layer nets.

    predict(X) treats the rows of X as consecutive time steps and runs
    each member's recurrence from a zero feedback state. Streaming
    callers own the feedback state explicitly: ``zero_state()`` makes a
    fresh (members, hidden) state and ``step(x, state)`` advances it one
    sample.
    """

    _family = FAMILY_ELMAN

    def __init__(self, n_members=COMMITTEE_SIZE, hidden_units=ELMAN_HIDDEN_UNITS,
                 epochs=6, seed=0, frame_index=0):
        self.n_members = n_members
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.seed = seed
        self.frame_index = frame_index

    def fit(self, X, y):
        X = check_window_matrix(X)
        y = check_regression_targets(y, len(X))
        self.members_ = train_committee(
            self._family, TrainSet(X, y), epochs=self.epochs, seed=self.seed,
            frame_index=self.frame_index, n_members=self.n_members,
            hidden_units=self.hidden_units)
        self.n_features_in_ = X.shape[1]
        self._w_in = np.stack([n.w_in for n in self.members_])
        self._w_rec = np.stack([n.w_rec for n in self.members_])
        self._b1 = np.stack([n.b1 for n in self.members_])
        self._w2 = np.stack([n.w2 for n in self.members_])
        self._b2 = np.array([n.b2 for n in self.members_])
        return self

    def zero_state(self) -> np.ndarray:
        _require_fitted(self, "members_")
        return np.zeros((len(self.members_), self.hidden_units))

    def step(self, x, state):
        """Advance every member one time step.

        Returns (committee mean, next state); ``state`` is not mutated.
        """
        _require_fitted(self, "members_")
        z = self._w_in @ x + (self._w_rec @ state[:, :, None])[:, :, 0] + self._b1
        h = np.tanh(z)
        y = (self._w2 * h).sum(axis=1) + self._b2
        return float(y.mean()), h

    def predict(self, X):
        _require_fitted(self, "members_")
        X = check_window_matrix(X, self.n_features_in_)
        state = self.zero_state()
        out = np.empty(len(X))
        for t, row in enumerate(X):
            out[t], state = self.step(row, state)
        return out


class RbfNetRegressor(BaseEstimator, RegressorMixin):
    """Greedily grown gaussian radial basis net with a linear output layer.

    Fitting is deterministic (no random restarts): neurons are added one
    at a time on the training input that reduces the refit error the
    most. ``sse_path_`` records the error after each added neuron.
    """

    def __init__(self, spread=RBF_SPREAD, max_neurons=RBF_MAX_NEURONS,
                 error_goal=RBF_ERROR_GOAL):
        self.spread = spread
        self.max_neurons = max_neurons
        self.error_goal = error_goal

    def fit(self, X, y):
        X = check_window_matrix(X)
        y = check_regression_targets(y, len(X))
        self.net_, self.sse_path_ = rbf_train_greedy(
            TrainSet(X, y), spread=self.spread, max_neurons=self.max_neurons,
            error_goal=self.error_goal, return_sse_path=True)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        _require_fitted(self, "net_")
        X = check_window_matrix(X, self.n_features_in_)
        return rbf_predict_batch(self.net_, X)

    def predict_one(self, x) -> float:
        _require_fitted(self, "net_")
        diff = self.net_.centers - x
        d2 = (diff * diff).sum(axis=1)
        acts = np.exp(-(self.net_.bias ** 2) * d2)
        return float(self.net_.lin_w @ acts + self.net_.lin_b)
