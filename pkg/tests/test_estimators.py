import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nadpcm.estimators import (
    ElmanCommitteeRegressor,
    MlpCommitteeRegressor,
    RbfNetRegressor,
    check_regression_targets,
    check_window_matrix,
)
from nadpcm.training import get_flat_params


def _lagged(x, order=10):
    windows = np.lib.stride_tricks.sliding_window_view(x, order + 1)
    return windows[:, :order].copy(), windows[:, order].copy()


@pytest.fixture()
def ar_data(rng):
    n = 240
    x = np.zeros(n)
    for t in range(2, n):
        x[t] = 1.5 * x[t - 1] - 0.7 * x[t - 2] + rng.uniform(-0.05, 0.05)
    x = 0.9 * x / np.max(np.abs(x))
    return _lagged(x)


ALL_ESTIMATORS = [
    lambda: MlpCommitteeRegressor(epochs=6, seed=3),
    lambda: ElmanCommitteeRegressor(epochs=6, seed=3),
    lambda: RbfNetRegressor(max_neurons=12),
]


@pytest.mark.parametrize("make", ALL_ESTIMATORS)
def test_sklearn_params_round_trip(make):
    est = make()
    params = est.get_params()
    est2 = clone(est)
    assert est2.get_params() == params
    est2.set_params(**params)
    assert est2.get_params() == params


@pytest.mark.parametrize("make", ALL_ESTIMATORS)
def test_fit_returns_self_and_predicts(make, ar_data):
    X, y = ar_data
    est = make()
    assert est.fit(X, y) is est
    pred = est.predict(X)
    assert pred.shape == y.shape
    assert np.all(np.isfinite(pred))
    # better than predicting zero on its own training data
    assert np.mean((pred - y) ** 2) < np.var(y)


@pytest.mark.parametrize("make", ALL_ESTIMATORS)
def test_not_fitted_error(make):
    with pytest.raises(NotFittedError):
        make().predict(np.zeros((3, 10)))


@pytest.mark.parametrize("make", ALL_ESTIMATORS)
def test_score_available(make, ar_data):
    X, y = ar_data
    assert make().fit(X, y).score(X, y) <= 1.0


def test_composes_with_sklearn_model_selection(ar_data):
    from sklearn.model_selection import GridSearchCV, KFold

    X, y = ar_data
    gs = GridSearchCV(RbfNetRegressor(), {"max_neurons": [4, 8]},
                      cv=KFold(3), scoring="neg_mean_squared_error")
    gs.fit(X, y)
    assert gs.best_params_["max_neurons"] in (4, 8)
    assert np.isfinite(gs.best_score_)


def test_committee_fit_deterministic(ar_data):
    X, y = ar_data
    a = MlpCommitteeRegressor(epochs=6, seed=11, frame_index=4).fit(X, y)
    b = MlpCommitteeRegressor(epochs=6, seed=11, frame_index=4).fit(X, y)
    for na, nb in zip(a.members_, b.members_):
        np.testing.assert_array_equal(get_flat_params(na), get_flat_params(nb))
    c = MlpCommitteeRegressor(epochs=6, seed=12, frame_index=4).fit(X, y)
    assert any(not np.array_equal(get_flat_params(na), get_flat_params(nc))
               for na, nc in zip(a.members_, c.members_))


def test_mlp_predict_one_matches_committee_mean(ar_data, rng):
    X, y = ar_data
    est = MlpCommitteeRegressor(epochs=6, seed=0).fit(X, y)
    x = rng.uniform(-1, 1, 10)
    member_mean = np.mean([np.tanh(n.w1 @ x + n.b1) @ n.w2 + n.b2 for n in est.members_])
    assert est.predict_one(x) == pytest.approx(member_mean, rel=1e-12)


def test_elman_predict_equals_manual_stepping(ar_data):
    X, y = ar_data
    est = ElmanCommitteeRegressor(epochs=6, seed=0).fit(X, y)
    state = est.zero_state()
    manual = []
    for row in X[:20]:
        out, state = est.step(row, state)
        manual.append(out)
    np.testing.assert_array_equal(est.predict(X[:20]), manual)


def test_elman_step_does_not_mutate_state(ar_data):
    X, y = ar_data
    est = ElmanCommitteeRegressor(epochs=6, seed=0).fit(X, y)
    state = est.zero_state()
    before = state.copy()
    est.step(X[0], state)
    np.testing.assert_array_equal(state, before)


def test_rbf_sse_path_monotone(ar_data):
    X, y = ar_data
    est = RbfNetRegressor(max_neurons=15).fit(X, y)
    path = est.sse_path_
    assert len(path) == 16  # zero-neuron start plus one entry per neuron
    assert all(b <= a * (1 + 1e-9) + 1e-18 for a, b in zip(path, path[1:]))


def test_rbf_predict_one_matches_batch(ar_data, rng):
    X, y = ar_data
    est = RbfNetRegressor(max_neurons=8).fit(X, y)
    x = rng.uniform(-1, 1, 10)
    assert est.predict_one(x) == pytest.approx(est.predict(x[None, :])[0], rel=1e-12)


class TestValidation:
    def test_window_matrix_shape(self):
        with pytest.raises(ValueError):
            check_window_matrix(np.zeros(5))
        with pytest.raises(ValueError):
            check_window_matrix(np.zeros((0, 10)))
        with pytest.raises(ValueError):
            check_window_matrix(np.full((4, 10), np.inf))
        with pytest.raises(ValueError):
            check_window_matrix(np.zeros((4, 9)), n_features=10)

    def test_targets(self):
        with pytest.raises(ValueError):
            check_regression_targets(np.zeros((4, 1)), 4)
        with pytest.raises(ValueError):
            check_regression_targets(np.zeros(3), 4)
        with pytest.raises(ValueError):
            check_regression_targets(np.array([0.0, np.nan]), 2)

    def test_fit_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            MlpCommitteeRegressor().fit(np.zeros((4, 10)), np.zeros(5))
        with pytest.raises(ValueError):
            RbfNetRegressor().fit(np.full((4, 10), np.nan), np.zeros(4))

    def test_predict_rejects_wrong_width(self, ar_data):
        X, y = ar_data
        est = MlpCommitteeRegressor(epochs=6).fit(X, y)
        with pytest.raises(ValueError):
            est.predict(np.zeros((2, 7)))
