"""Per-frame backward training of the predictor families.

MLP and Elman nets are trained with a damped Gauss-Newton (Levenberg-
Marquardt) loop minimizing F = beta * sum(residual^2) + alpha *
sum(weight^2), where alpha and beta are re-estimated after every
accepted step from the effective number of parameters. Five members per
committee start from independent seeded initializations.

For the Elman net the Jacobian uses truncation depth 1: the feedback
state sequence comes from the current forward pass and is held constant
while differentiating, so each residual keeps the plain least-squares
Jacobian structure.

The radial basis net is built greedily: one neuron at a time, always the
candidate training input that lowers the refit error the most. Training
is deterministic, so it needs no multi-start.

Determinism is load-bearing here: the decoder repeats this training on
its own reconstructed samples and must arrive at bit-identical
parameters.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .defaults import (
    COMMITTEE_SIZE,
    ELMAN_HIDDEN_UNITS,
    HALF_ACTIVATION_INPUT,
    INIT_WEIGHT_HIGH,
    INIT_WEIGHT_LOW,
    LM_MU_DEC,
    LM_MU_INC,
    LM_MU_INITIAL,
    LM_MU_MAX,
    LM_MU_MIN,
    MLP_HIDDEN_UNITS,
    PREDICTION_ORDER,
    REG_ALPHA_INITIAL,
    REG_BETA_INITIAL,
    RBF_ERROR_GOAL,
    RBF_MAX_NEURONS,
    RBF_RIDGE,
    RBF_SPREAD,
)
from .errors import DegenerateGram, FrameTooShort, SingularNormalEquations
from .predictors import FAMILY_ELMAN, FAMILY_IDS, FAMILY_MLP, ElmanNet, MlpNet, RbfNet
from .rng import SplitMix64, derive_seed
from .signalio import Frame

log = logging.getLogger(__name__)


@dataclass
class TrainSet:
    """Lagged input windows and one-step-ahead targets."""

    inputs: np.ndarray  # (M, order)
    targets: np.ndarray  # (M,)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.targets)


def build_trainset(frame, order: int = PREDICTION_ORDER) -> TrainSet:
    """Sliding-window pairs from one reconstructed frame.

    Row t holds samples [t .. t+order-1] oldest first; its target is
    sample t+order. A frame of length L yields L - order rows.
    """
    x = frame.samples if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)
    if len(x) <= order:
        raise FrameTooShort(f"need more than {order} samples, got {len(x)}")
    windows = np.lib.stride_tricks.sliding_window_view(x, order + 1)
    return TrainSet(inputs=windows[:, :order].copy(), targets=windows[:, order].copy())


@dataclass(frozen=True, slots=True)
class LmState:
    mu: float = LM_MU_INITIAL
    mu_inc: float = LM_MU_INC
    mu_dec: float = LM_MU_DEC
    alpha: float = REG_ALPHA_INITIAL
    beta: float = REG_BETA_INITIAL
    epoch: int = 0

    @property
    def stalled(self) -> bool:
        return self.mu >= LM_MU_MAX


@dataclass(frozen=True, slots=True)
class LmStepInfo:
    accepted: bool
    e_data: float
    e_weights: float
    trace_hinv: float


# --- parameter flattening -------------------------------------------------
# Flat layouts (documented, relied on by the finite-difference tests):
#   MLP:   [w1 row-major, b1, w2, b2]
#   Elman: [w_in row-major, w_rec row-major, b1, w2, b2]


def get_flat_params(net) -> np.ndarray:
    if isinstance(net, MlpNet):
        return np.concatenate([net.w1.ravel(), net.b1, net.w2, [net.b2]])
    return np.concatenate(
        [net.w_in.ravel(), net.w_rec.ravel(), net.b1, net.w2, [net.b2]]
    )


def set_flat_params(net, vec: np.ndarray):
    """New net of the same family with parameters taken from vec."""
    if isinstance(net, MlpNet):
        h, d = net.w1.shape
        w1, rest = vec[: h * d].reshape(h, d), vec[h * d:]
        return MlpNet(w1=w1.copy(), b1=rest[:h].copy(), w2=rest[h: 2 * h].copy(),
                      b2=float(rest[2 * h]))
    h, d = net.w_in.shape
    n_in, n_rec = h * d, h * h
    w_in = vec[:n_in].reshape(h, d).copy()
    w_rec = vec[n_in: n_in + n_rec].reshape(h, h).copy()
    rest = vec[n_in + n_rec:]
    return ElmanNet(w_in=w_in, w_rec=w_rec, b1=rest[:h].copy(), w2=rest[h: 2 * h].copy(),
                    b2=float(rest[2 * h]), context=np.zeros(h))


# --- forward passes and Jacobians ------------------------------------------


def _mlp_forward(net: MlpNet, X: np.ndarray):
    H = np.tanh(X @ net.w1.T + net.b1)
    return H @ net.w2 + net.b2, H


def _elman_recurrence_pair(U: np.ndarray, w_rec: np.ndarray, c_init,
                           H: np.ndarray, C: np.ndarray) -> None:
    """Two-unit recurrence in scalar arithmetic.

    This loop sits inside every training trial; ndarray operations cost
    more than the 8 flops per step at this size.
    """
    w00, w01 = float(w_rec[0, 0]), float(w_rec[0, 1])
    w10, w11 = float(w_rec[1, 0]), float(w_rec[1, 1])
    c0, c1 = float(c_init[0]), float(c_init[1])
    u0 = U[:, 0].tolist()
    u1 = U[:, 1].tolist()
    tanh = math.tanh
    h0, h1, cc0, cc1 = [], [], [], []
    for t in range(len(u0)):
        cc0.append(c0)
        cc1.append(c1)
        c0, c1 = tanh(u0[t] + w00 * c0 + w01 * c1), tanh(u1[t] + w10 * c0 + w11 * c1)
        h0.append(c0)
        h1.append(c1)
    H[:, 0], H[:, 1] = h0, h1
    C[:, 0], C[:, 1] = cc0, cc1


def elman_forward_sequence(net: ElmanNet, X: np.ndarray, context0=None):
    """Run the recurrence over the rows of X in order.

    Returns (outputs, hidden_states, contexts): contexts[t] is the
    feedback state seen by row t. Training starts from a zero context.
    """
    m = len(X)
    hn = len(net.b1)
    U = X @ net.w_in.T + net.b1
    H = np.empty((m, hn))
    C = np.empty((m, hn))
    c = np.zeros(hn) if context0 is None else np.asarray(context0, dtype=np.float64)
    if hn == 2:
        _elman_recurrence_pair(U, net.w_rec, c, H, C)
    else:
        w_rec = net.w_rec
        for t in range(m):
            C[t] = c
            c = np.tanh(U[t] + w_rec @ c)
            H[t] = c
    return H @ net.w2 + net.b2, H, C


def _forward_state(net, ts: TrainSet):
    """Residuals plus the forward quantities the Jacobian reuses."""
    if isinstance(net, MlpNet):
        y, H = _mlp_forward(net, ts.inputs)
        return y - ts.targets, H, None
    y, H, C = elman_forward_sequence(net, ts.inputs)
    return y - ts.targets, H, C


def residuals(net, ts: TrainSet) -> np.ndarray:
    """Prediction minus target for every training row."""
    return _forward_state(net, ts)[0]


def _jacobian_from_state(net, X: np.ndarray, H: np.ndarray, C) -> np.ndarray:
    m = len(X)
    d = (1.0 - H * H) * net.w2  # (m, hidden)
    j_x = (d[:, :, None] * X[:, None, :]).reshape(m, -1)
    if C is None:
        return np.hstack([j_x, d, H, np.ones((m, 1))])
    j_rec = (d[:, :, None] * C[:, None, :]).reshape(m, -1)
    return np.hstack([j_x, j_rec, d, H, np.ones((m, 1))])


def residual_jacobian(net, ts: TrainSet):
    """Residuals and their Jacobian w.r.t. the flat parameter vector.

    Elman rows are differentiated with the feedback state sequence of
    the current forward pass held fixed (truncation depth 1).
    """
    r, H, C = _forward_state(net, ts)
    return r, _jacobian_from_state(net, ts.inputs, H, C)


# --- damped Gauss-Newton epoch ----------------------------------------------


def lm_epoch(net, ts: TrainSet, st: LmState):
    """One outer training iteration: returns (net', st', LmStepInfo).

    A trial step solves (beta J'J + (alpha + mu) I) delta = -(beta J'r +
    alpha w). The step is accepted only if it strictly decreases
    F = beta*E_D + alpha*E_W; rejection retries with mu * mu_inc until
    acceptance or the mu ceiling. On ceiling the net is returned
    unchanged with st.stalled set, which ends the epoch loop upstream.

    info.trace_hinv carries trace((beta J'J + alpha I)^-1) at the
    pre-step point, for the regularization update.
    """
    net2, st2, info, _ = _lm_epoch_cached(net, ts, st, None)
    return net2, st2, info


def _lm_epoch_cached(net, ts: TrainSet, st: LmState, fwd):
    """lm_epoch that accepts and returns the forward state, so the epoch
    loop never recomputes the pass that accepted the previous step."""
    if fwd is None:
        fwd = _forward_state(net, ts)
    r, H, C = fwd
    J = _jacobian_from_state(net, ts.inputs, H, C)
    w = get_flat_params(net)
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(r))):
        raise SingularNormalEquations("non-finite residuals or Jacobian")
    k = len(w)
    e_data = float(r @ r)
    e_weights = float(w @ w)
    f_current = st.beta * e_data + st.alpha * e_weights
    grad = st.beta * (J.T @ r) + st.alpha * w
    gn = st.beta * (J.T @ J)
    eye = np.eye(k)

    mu = st.mu
    while True:
        try:
            delta = np.linalg.solve(gn + (st.alpha + mu) * eye, -grad)
        except np.linalg.LinAlgError as exc:
            raise SingularNormalEquations(str(exc)) from exc
        w_trial = w + delta
        net_trial = set_flat_params(net, w_trial)
        fwd_trial = _forward_state(net_trial, ts)
        r_trial = fwd_trial[0]
        e_data_t = float(r_trial @ r_trial)
        e_weights_t = float(w_trial @ w_trial)
        f_trial = st.beta * e_data_t + st.alpha * e_weights_t
        if np.isfinite(f_trial) and f_trial < f_current:
            try:
                hinv = np.linalg.inv(gn + st.alpha * eye)
            except np.linalg.LinAlgError:
                hinv = np.linalg.pinv(gn + st.alpha * eye)
            info = LmStepInfo(accepted=True, e_data=e_data_t,
                              e_weights=e_weights_t, trace_hinv=float(np.trace(hinv)))
            st_next = replace(st, mu=max(mu * st.mu_dec, LM_MU_MIN), epoch=st.epoch + 1)
            return net_trial, st_next, info, fwd_trial
        mu = mu * st.mu_inc
        if mu >= LM_MU_MAX:
            info = LmStepInfo(accepted=False, e_data=e_data,
                              e_weights=e_weights, trace_hinv=0.0)
            return net, replace(st, mu=LM_MU_MAX, epoch=st.epoch + 1), info, fwd


def bayes_reg_update(st: LmState, e_data: float, e_weights: float,
                     trace_hinv: float, n_params: int, n_samples: int) -> LmState:
    """Re-estimate the objective weights from the effective parameter count.

    gamma = n_params - 2 * alpha * trace_hinv, clamped to [0, n_params];
    alpha' = gamma / (2 * E_W) (kept unchanged while E_W == 0);
    beta' = (N - gamma) / (2 * E_D).
    """
    gamma = n_params - 2.0 * st.alpha * trace_hinv
    gamma = min(max(gamma, 0.0), float(n_params))
    alpha = gamma / (2.0 * e_weights) if e_weights > 0.0 else st.alpha
    beta = st.beta
    if e_data > 0.0:
        beta = (n_samples - gamma) / (2.0 * e_data)
        if beta <= 0.0:
            log.warning("effective parameters exceed sample count (gamma=%.3f, N=%d)",
                        gamma, n_samples)
    return replace(st, alpha=alpha, beta=beta)


# --- committees --------------------------------------------------------------


def init_net(family: str, rng: SplitMix64, hidden_units: int, order: int):
    """Fresh net with weights drawn uniform on [-0.5, 0.5).

    Draw order is fixed: w1/w_in row-major, (w_rec row-major,) b1, w2, b2.
    """
    u = lambda size: rng.uniform(INIT_WEIGHT_LOW, INIT_WEIGHT_HIGH, size)
    if family == FAMILY_MLP:
        return MlpNet(w1=u((hidden_units, order)), b1=u(hidden_units),
                      w2=u(hidden_units), b2=float(u(None)))
    if family == FAMILY_ELMAN:
        return ElmanNet(w_in=u((hidden_units, order)), w_rec=u((hidden_units, hidden_units)),
                        b1=u(hidden_units), w2=u(hidden_units), b2=float(u(None)),
                        context=np.zeros(hidden_units))
    raise ValueError(f"no random initialization for family {family!r}")


def train_committee(family: str, ts: TrainSet, epochs: int = 6, seed: int = 0,
                    frame_index: int = 0, n_members: int = COMMITTEE_SIZE,
                    hidden_units: int | None = None) -> list:
    """Train n_members nets of one family from independent restarts.

    Member i draws its initialization from a SplitMix64 stream seeded
    with derive_seed(seed, frame_index, family_id, i); everything
    downstream is deterministic in (seed, frame_index, family, epochs,
    ts). A member whose training degenerates is replaced by its
    untrained initialization; if every member degenerates the committee
    raises SingularNormalEquations.
    """
    if hidden_units is None:
        hidden_units = MLP_HIDDEN_UNITS if family == FAMILY_MLP else ELMAN_HIDDEN_UNITS
    order = ts.inputs.shape[1]
    family_id = FAMILY_IDS[family]
    nets = []
    failures = 0
    for member in range(n_members):
        rng = SplitMix64(derive_seed(seed, frame_index, family_id, member))
        net0 = init_net(family, rng, hidden_units, order)
        net, st = net0, LmState()
        k = len(get_flat_params(net0))
        try:
            fwd = None
            for _ in range(epochs):
                net, st, info, fwd = _lm_epoch_cached(net, ts, st, fwd)
                if info.accepted:
                    st = bayes_reg_update(st, info.e_data, info.e_weights,
                                          info.trace_hinv, k, len(ts))
                elif st.stalled:
                    break
        except SingularNormalEquations:
            log.warning("committee member %d (%s) degenerated; keeping its initialization",
                        member, family)
            net = net0
            failures += 1
        nets.append(net)
    if failures == n_members:
        raise SingularNormalEquations(f"all {n_members} {family} members degenerated")
    return nets


# --- greedy radial basis construction ----------------------------------------


def rbf_train_greedy(ts: TrainSet, spread: float = RBF_SPREAD,
                     max_neurons: int = RBF_MAX_NEURONS,
                     error_goal: float = RBF_ERROR_GOAL,
                     return_sse_path: bool = False):
    """Build a radial basis net one neuron at a time.

    Every training input is a candidate center. Each round refits the
    linear layer (weights and bias) over the already-chosen centers plus
    each remaining candidate and keeps the candidate with the lowest sum
    of squared errors; ties go to the lowest input index. Stops at
    max_neurons (or all inputs used) or when the SSE reaches error_goal.

    The linear refits solve ridge-stabilized normal equations (ridge
    1e-10), which keeps collinear activation columns deterministic.
    """
    X, y = ts.inputs, ts.targets
    m = len(y)
    if m < 1:
        raise ValueError("training set is empty")
    bias = HALF_ACTIVATION_INPUT / spread

    sq_norms = np.sum(X * X, axis=1)
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (X @ X.T)
    np.clip(d2, 0.0, None, out=d2)
    phi = np.exp(-(bias * bias) * d2)  # phi[i, j]: neuron centered at X[j], input X[i]

    gram = phi.T @ phi
    phi_y = phi.T @ y
    col_sum = phi.sum(axis=0)
    y_sum = float(y.sum())
    y_dot = float(y @ y)

    selected: list[int] = []
    sse = y_dot  # zero neurons, zero output
    sse_path = [sse]
    weights = np.zeros(1)

    def _refit(indices):
        """Exact ridge refit over the given centers; returns (w_full, sse)."""
        a = np.column_stack([phi[:, indices], np.ones(m)])
        g = a.T @ a + RBF_RIDGE * np.eye(len(indices) + 1)
        try:
            w_full = np.linalg.solve(g, a.T @ y)
        except np.linalg.LinAlgError as exc:
            raise DegenerateGram(str(exc)) from exc
        resid = y - a @ w_full
        return w_full, float(resid @ resid)

    while len(selected) < min(max_neurons, m) and sse > error_goal:
        cands = np.setdiff1d(np.arange(m), selected, assume_unique=True)
        k = len(selected)
        nc = len(cands)
        # Normal equations for columns [selected..., candidate, ones],
        # assembled for all candidates at once from the precomputed Gram.
        size = k + 2
        g_batch = np.empty((nc, size, size))
        rhs = np.empty((nc, size))
        if k:
            sel = np.asarray(selected)
            g_batch[:, :k, :k] = gram[np.ix_(sel, sel)]
            cross = gram[sel][:, cands]  # (k, nc)
            g_batch[:, :k, k] = cross.T
            g_batch[:, k, :k] = cross.T
            g_batch[:, :k, k + 1] = col_sum[sel]
            g_batch[:, k + 1, :k] = col_sum[sel]
            rhs[:, :k] = phi_y[sel]
        g_batch[:, k, k] = gram[cands, cands]
        g_batch[:, k, k + 1] = col_sum[cands]
        g_batch[:, k + 1, k] = col_sum[cands]
        g_batch[:, k + 1, k + 1] = m
        g_batch[:, np.arange(size), np.arange(size)] += RBF_RIDGE
        rhs[:, k] = phi_y[cands]
        rhs[:, k + 1] = y_sum
        try:
            w = np.linalg.solve(g_batch, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise DegenerateGram(str(exc)) from exc
        # SSE via the quadratic form; ridge term removed from the quadratic.
        gw = (g_batch @ w[..., None])[..., 0]
        quad = (w * gw).sum(axis=1) - RBF_RIDGE * (w * w).sum(axis=1)
        sse_all = y_dot - 2.0 * (w * rhs).sum(axis=1) + quad
        best = int(cands[int(np.argmin(sse_all))])
        selected.append(best)
        weights, sse = _refit(selected)
        sse_path.append(sse)

    net = RbfNet(centers=X[selected].copy(), bias=bias,
                 lin_w=weights[:-1].copy(), lin_b=float(weights[-1]), spread=spread)
    if return_sse_path:
        return net, np.asarray(sse_path)
    return net
