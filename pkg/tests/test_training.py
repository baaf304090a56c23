import math

import numpy as np
import pytest

from nadpcm.defaults import LM_MU_MIN
from nadpcm.errors import FrameTooShort, SingularNormalEquations
from nadpcm.predictors import MlpNet
from nadpcm.rng import SplitMix64
from nadpcm.training import (
    LmState,
    TrainSet,
    bayes_reg_update,
    build_trainset,
    elman_forward_sequence,
    get_flat_params,
    init_net,
    lm_epoch,
    rbf_train_greedy,
    residual_jacobian,
    residuals,
    set_flat_params,
    train_committee,
)


def _random_trainset(rng, m=40, order=6):
    return TrainSet(inputs=rng.uniform(-1, 1, (m, order)),
                    targets=rng.uniform(-1, 1, m))


class TestBuildTrainset:
    def test_row_count(self):
        ts = build_trainset(np.linspace(-1, 1, 200), order=10)
        assert len(ts) == 190
        assert ts.inputs.shape == (190, 10)

    def test_window_alignment(self):
        ramp = np.arange(200, dtype=float)
        ts = build_trainset(ramp, order=10)
        np.testing.assert_array_equal(ts.inputs[0], np.arange(10))
        assert ts.targets[0] == 10.0
        np.testing.assert_array_equal(ts.inputs[5], np.arange(5, 15))
        assert ts.targets[-1] == 199.0

    def test_too_short(self):
        with pytest.raises(FrameTooShort):
            build_trainset(np.zeros(10), order=10)


class TestLmEpoch:
    def test_linear_problem_one_step_optimum(self, rng):
        """With only the output bias active the problem is linear least
        squares; at negligible damping one accepted step must land on the
        closed-form optimum (the target mean)."""
        y = rng.uniform(-1, 1, 50)
        ts = TrainSet(inputs=rng.uniform(-1, 1, (50, 4)), targets=y)
        net = MlpNet(w1=np.zeros((2, 4)), b1=np.zeros(2), w2=np.zeros(2), b2=0.9)
        st = LmState(mu=LM_MU_MIN, alpha=0.0, beta=1.0)
        net2, st2, info = lm_epoch(net, ts, st)
        assert info.accepted
        optimum = y.mean()  # normal equations for a ones-column design
        assert abs(net2.b2 - optimum) < 1e-10
        np.testing.assert_array_equal(net2.w1, net.w1)
        np.testing.assert_array_equal(net2.w2, net.w2)

    def test_objective_never_increases_over_accepted_steps(self, rng):
        for trial in range(10):
            ts = _random_trainset(rng)
            family = "mlp" if trial % 2 == 0 else "elman"
            net = init_net(family, SplitMix64(trial), 2, 6)
            st = LmState(alpha=0.1, beta=1.0)
            f_values = []
            for _ in range(8):
                net, st, info = lm_epoch(net, ts, st)
                r = residuals(net, ts)
                w = get_flat_params(net)
                f_values.append(st.beta * float(r @ r) + st.alpha * float(w @ w))
                if not info.accepted and st.stalled:
                    break
            assert all(b <= a + 1e-12 for a, b in zip(f_values, f_values[1:]))

    def test_accepted_epoch_advances_state(self, rng):
        ts = _random_trainset(rng, m=20)
        net = init_net("mlp", SplitMix64(3), 2, 6)
        st = LmState()
        _, st2, info = lm_epoch(net, ts, st)
        assert info.accepted
        assert st2.epoch == st.epoch + 1

    def test_stalls_at_exact_optimum(self, rng):
        """At the optimum no trial can strictly decrease F, so damping
        climbs to its ceiling and the net is returned unchanged."""
        y = rng.uniform(-1, 1, 30)
        ts = TrainSet(inputs=rng.uniform(-1, 1, (30, 4)), targets=y)
        net = MlpNet(w1=np.zeros((2, 4)), b1=np.zeros(2), w2=np.zeros(2),
                     b2=float(y.mean()))
        net2, st2, info = lm_epoch(net, ts, LmState(alpha=0.0))
        assert not info.accepted
        assert st2.stalled
        assert net2.b2 == net.b2

    def test_non_finite_data_raises(self):
        ts = TrainSet(inputs=np.full((5, 3), np.nan), targets=np.zeros(5))
        net = init_net("mlp", SplitMix64(0), 2, 3)
        with pytest.raises(SingularNormalEquations):
            lm_epoch(net, ts, LmState())


class TestJacobian:
    @staticmethod
    def _fd_jacobian(eval_fn, params, eps=1e-6):
        base = eval_fn(params)
        J = np.empty((len(base), len(params)))
        for k in range(len(params)):
            up, down = params.copy(), params.copy()
            up[k] += eps
            down[k] -= eps
            J[:, k] = (eval_fn(up) - eval_fn(down)) / (2 * eps)
        return J

    def test_mlp_jacobian_matches_finite_differences(self, rng):
        for trial in range(20):
            m, order = 12, 5
            ts = _random_trainset(rng, m=m, order=order)
            net = init_net("mlp", SplitMix64(trial), 2, order)

            def eval_residuals(params):
                return residuals(set_flat_params(net, params), ts)

            _, J = residual_jacobian(net, ts)
            J_fd = self._fd_jacobian(eval_residuals, get_flat_params(net))
            rel = np.linalg.norm(J - J_fd) / np.linalg.norm(J_fd)
            assert rel < 1e-4

    def test_elman_jacobian_matches_frozen_context_differences(self, rng):
        """The recurrent Jacobian uses truncation depth 1, so the oracle
        differentiates the same map: outputs with the feedback sequence
        pinned at the base forward pass."""
        for trial in range(20):
            m, order = 12, 5
            ts = _random_trainset(rng, m=m, order=order)
            net = init_net("elman", SplitMix64(100 + trial), 2, order)
            _, _, contexts = elman_forward_sequence(net, ts.inputs)

            def eval_frozen(params):
                n = set_flat_params(net, params)
                z = ts.inputs @ n.w_in.T + contexts @ n.w_rec.T + n.b1
                return np.tanh(z) @ n.w2 + n.b2 - ts.targets

            _, J = residual_jacobian(net, ts)
            J_fd = self._fd_jacobian(eval_frozen, get_flat_params(net))
            rel = np.linalg.norm(J - J_fd) / np.linalg.norm(J_fd)
            assert rel < 1e-4


class TestBayesRegUpdate:
    def test_zero_trace_gives_full_gamma(self):
        st = bayes_reg_update(LmState(alpha=1.0, beta=1.0), e_data=2.0, e_weights=4.0,
                              trace_hinv=0.0, n_params=7, n_samples=20)
        # gamma = 7: alpha = 7/8, beta = 13/4
        assert st.alpha == pytest.approx(7 / 8)
        assert st.beta == pytest.approx(13 / 4)

    def test_worked_example(self):
        st = bayes_reg_update(LmState(alpha=1.0, beta=1.0), e_data=1.0, e_weights=1.0,
                              trace_hinv=1.0, n_params=4, n_samples=10)
        assert st.alpha == pytest.approx(1.0)
        assert st.beta == pytest.approx(4.0)

    def test_gamma_clamped_at_zero(self):
        st = bayes_reg_update(LmState(alpha=10.0, beta=1.0), e_data=1.0, e_weights=1.0,
                              trace_hinv=1.0, n_params=4, n_samples=10)
        assert st.alpha == 0.0  # gamma clamped to 0, not -16
        assert st.beta == pytest.approx(5.0)

    def test_zero_weight_norm_keeps_alpha(self):
        st = bayes_reg_update(LmState(alpha=0.25, beta=1.0), e_data=1.0, e_weights=0.0,
                              trace_hinv=0.5, n_params=4, n_samples=10)
        assert st.alpha == 0.25


class TestTrainCommittee:
    def test_deterministic_given_seed(self, rng):
        ts = _random_trainset(rng, m=30, order=10)
        nets_a = train_committee("mlp", ts, epochs=3, seed=42, frame_index=7)
        nets_b = train_committee("mlp", ts, epochs=3, seed=42, frame_index=7)
        for a, b in zip(nets_a, nets_b):
            np.testing.assert_array_equal(get_flat_params(a), get_flat_params(b))

    def test_different_seeds_differ(self, rng):
        ts = _random_trainset(rng, m=30, order=10)
        nets_a = train_committee("elman", ts, epochs=2, seed=1)
        nets_b = train_committee("elman", ts, epochs=2, seed=2)
        assert any(not np.array_equal(get_flat_params(a), get_flat_params(b))
                   for a, b in zip(nets_a, nets_b))

    def test_member_count(self, rng):
        ts = _random_trainset(rng, m=25, order=10)
        assert len(train_committee("mlp", ts, epochs=2)) == 5

    def test_beats_zero_predictor_on_ar2(self):
        """On a linear second-order autoregressive signal the committee's
        one-step MSE must beat predicting zero (the signal variance)."""
        gen = SplitMix64(5)
        n = 400
        x = np.zeros(n)
        for t in range(2, n):
            x[t] = 1.6 * x[t - 1] - 0.81 * x[t - 2] + gen.uniform(-0.1, 0.1)
        x = 0.9 * x / np.max(np.abs(x))
        ts = build_trainset(x[:210], order=10)
        nets = train_committee("mlp", ts, epochs=6, seed=0)
        holdout = build_trainset(x[200:], order=10)
        preds = np.mean([np.tanh(holdout.inputs @ n_.w1.T + n_.b1) @ n_.w2 + n_.b2
                         for n_ in nets], axis=0)
        mse = float(np.mean((preds - holdout.targets) ** 2))
        assert mse < float(np.var(holdout.targets))

    def test_all_members_degenerate_raises(self):
        ts = TrainSet(inputs=np.full((20, 10), np.nan), targets=np.zeros(20))
        with pytest.raises(SingularNormalEquations):
            train_committee("mlp", ts, epochs=1)


class TestGreedyRbf:
    def test_single_point_interpolation(self):
        ts = TrainSet(inputs=np.array([[0.1, -0.2, 0.3]]), targets=np.array([0.7]))
        net, path = rbf_train_greedy(ts, max_neurons=20, return_sse_path=True)
        assert net.centers.shape == (1, 3)
        assert path[-1] < 1e-20

    def test_sse_non_increasing(self, rng):
        for _ in range(10):
            ts = _random_trainset(rng, m=25, order=4)
            _, path = rbf_train_greedy(ts, max_neurons=12, return_sse_path=True)
            assert all(b <= a * (1 + 1e-9) + 1e-18 for a, b in zip(path, path[1:]))

    def test_respects_max_neurons(self, rng):
        ts = _random_trainset(rng, m=30, order=4)
        net = rbf_train_greedy(ts, max_neurons=7)
        assert len(net.centers) == 7

    def test_error_goal_stops_early(self, rng):
        ts = _random_trainset(rng, m=30, order=4)
        _, path_free = rbf_train_greedy(ts, max_neurons=30, return_sse_path=True)
        goal = float(path_free[len(path_free) // 2])
        net, path = rbf_train_greedy(ts, max_neurons=30, error_goal=goal,
                                     return_sse_path=True)
        assert path[-1] <= goal
        assert len(net.centers) < 30

    def test_uncovered_region_output_is_near_zero(self):
        """Narrow gaussians centered on clustered 1-D samples of a sine
        cannot reach the gaps between clusters, where the net output
        collapses to its (near-zero) linear bias."""
        xs = np.concatenate([np.linspace(-1.0, -0.6, 8),
                             np.linspace(-0.2, 0.2, 8),
                             np.linspace(0.6, 1.0, 8)])
        ys = np.sin(5 * np.pi * xs)  # zero-mean over each cluster
        ts = TrainSet(inputs=xs[:, None], targets=ys)
        net = rbf_train_greedy(ts, spread=0.06, max_neurons=10)
        for probe in (-0.35, 0.35, -0.45, 0.45):
            dists = np.abs(net.centers[:, 0] - probe)
            assert dists.min() >= 0.15 - 1e-12  # structurally uncovered
            pred = float(net.lin_w @ np.exp(-(net.bias * dists) ** 2) + net.lin_b)
            assert abs(pred - net.lin_b) < 0.02  # gaussians contribute nothing
            assert abs(pred) < 0.05  # output essentially zero
            assert abs(math.sin(5 * math.pi * probe)) > 0.5  # unlike the signal there

    def test_deterministic(self, rng):
        ts = _random_trainset(rng, m=30, order=4)
        a = rbf_train_greedy(ts, max_neurons=10)
        b = rbf_train_greedy(ts, max_neurons=10)
        np.testing.assert_array_equal(a.centers, b.centers)
        np.testing.assert_array_equal(a.lin_w, b.lin_w)
        assert a.lin_b == b.lin_b
