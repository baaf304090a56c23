"""Predictor families and committee fusion.

Three one-step-ahead predictors share a common input: the last
PREDICTION_ORDER reconstructed samples, oldest first.

* MLP: 2 sigmoid hidden units, linear output.
* Elman: same shape plus a recurrent first layer; the previous hidden
  output feeds back as extra input, so two identical nets can disagree
  when their feedback states differ.
* Gaussian radial basis net: up to 20 neurons, each centered on a
  training input, with a shared width; a linear layer combines them.

Family outputs can be fused by mean or median; the fusion record keeps
which family produced the minimum/median/maximum for later frame-level
rank statistics.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .defaults import HALF_ACTIVATION_INPUT

FAMILY_MLP = "mlp"
FAMILY_ELMAN = "elman"
FAMILY_RBF = "rbf"
FAMILY_LABELS = (FAMILY_MLP, FAMILY_ELMAN, FAMILY_RBF)
FAMILY_IDS = {name: i for i, name in enumerate(FAMILY_LABELS)}


def tansig(x):
    """Hyperbolic-tangent sigmoid, range (-1, 1). Saturating for large |x|."""
    return np.tanh(x)


def radbas(n):
    """Gaussian radial transfer exp(-n^2); maximum 1 at n = 0."""
    return np.exp(-np.square(n))


def rbf_neuron(center, bias: float, x) -> float:
    """Single radial neuron: radbas(||center - x|| * bias).

    With bias = 0.8326 / sigma the output is 0.5 at distance sigma.
    """
    d = np.linalg.norm(np.asarray(center, dtype=np.float64) - np.asarray(x, dtype=np.float64))
    return float(radbas(d * bias))


@dataclass
class MlpNet:
    w1: np.ndarray  # (hidden, order)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float


@dataclass
class ElmanNet:
    w_in: np.ndarray  # (hidden, order)
    w_rec: np.ndarray  # (hidden, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float
    context: np.ndarray = None  # previous hidden output

    def __post_init__(self):
        if self.context is None:
            self.context = np.zeros(len(self.b1))


@dataclass
class RbfNet:
    centers: np.ndarray  # (neurons, order)
    bias: float  # shared; bias * spread == HALF_ACTIVATION_INPUT
    lin_w: np.ndarray  # (neurons,)
    lin_b: float
    spread: float

    def validate(self) -> None:
        if self.bias <= 0:
            raise ValueError("bias must be positive")
        if abs(self.bias * self.spread - HALF_ACTIVATION_INPUT) > 1e-9:
            raise ValueError("bias * spread must equal the half-activation constant")


def mlp_predict(net: MlpNet, x) -> float:
    """Forward pass w2 . tansig(w1 x + b1) + b2."""
    h = np.tanh(net.w1 @ np.asarray(x, dtype=np.float64) + net.b1)
    return float(net.w2 @ h + net.b2)


def mlp_predict_batch(net: MlpNet, X: np.ndarray) -> np.ndarray:
    return np.tanh(X @ net.w1.T + net.b1) @ net.w2 + net.b2


def elman_predict(net: ElmanNet, x):
    """One recurrent step: returns (y, next_context). Does not mutate net."""
    h = np.tanh(net.w_in @ np.asarray(x, dtype=np.float64) + net.w_rec @ net.context + net.b1)
    return float(net.w2 @ h + net.b2), h


def rbf_predict(net: RbfNet, x) -> float:
    """lin_b + sum_i lin_w[i] * radbas(||centers[i] - x|| * bias).

    Far from every center all activations vanish and the output falls
    back to lin_b.
    """
    d = np.linalg.norm(net.centers - np.asarray(x, dtype=np.float64), axis=1)
    return float(net.lin_b + net.lin_w @ radbas(d * net.bias))


def rbf_predict_batch(net: RbfNet, X: np.ndarray) -> np.ndarray:
    d2 = np.sum(np.square(X[:, None, :] - net.centers[None, :, :]), axis=2)
    return np.exp(-(net.bias ** 2) * d2) @ net.lin_w + net.lin_b


def committee_average(nets, x) -> float:
    """Arithmetic mean of the member outputs for one input window.

    Elman members are evaluated at their current feedback state without
    advancing it; streaming callers advance contexts via elman_predict.
    """
    total = 0.0
    for net in nets:
        if isinstance(net, ElmanNet):
            y, _ = elman_predict(net, x)
        elif isinstance(net, MlpNet):
            y = mlp_predict(net, x)
        else:
            y = rbf_predict(net, x)
        total += y
    return total / len(nets)


@dataclass(frozen=True, slots=True)
class FusionRecord:
    """Family index (0=mlp, 1=elman, 2=rbf) holding each rank for one sample."""

    min_family: int
    median_family: int
    max_family: int


def fuse(outputs, mode: str):
    """Combine the three family outputs; returns (value, FusionRecord).

    mode is "mean" or "median". Rank attribution is by value: ties go to
    the lowest family index, so a family can hold more than one rank for
    a sample.
    """
    vals = [float(v) for v in outputs]
    if len(vals) != 3:
        raise ValueError("fuse expects exactly three family outputs")
    lo, mid, hi = sorted(vals)
    record = FusionRecord(
        min_family=vals.index(lo),
        median_family=vals.index(mid),
        max_family=vals.index(hi),
    )
    if mode == "mean":
        value = (vals[0] + vals[1] + vals[2]) / 3.0
    elif mode == "median":
        value = mid
    else:
        raise ValueError(f"unknown fusion mode: {mode}")
    return value, record


# ---------------------------------------------------------------------------
# Binary serialization for debugging/inspection only; nothing is ever
# transmitted, since both codec ends retrain identical parameters.

_BLOB_MAGIC = b"NPRD"
_BLOB_VERSION = 1
_BLOB_FAMILY = {MlpNet: 0, ElmanNet: 1, RbfNet: 2}


def _pack_array(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def serialize_net(net) -> bytes:
    """Versioned little-endian blob for a single net."""
    family = _BLOB_FAMILY[type(net)]
    if isinstance(net, MlpNet):
        head = struct.pack("<4sHBII", _BLOB_MAGIC, _BLOB_VERSION, family,
                           net.w1.shape[0], net.w1.shape[1])
        body = b"".join([_pack_array(net.w1), _pack_array(net.b1),
                         _pack_array(net.w2), struct.pack("<d", net.b2)])
    elif isinstance(net, ElmanNet):
        head = struct.pack("<4sHBII", _BLOB_MAGIC, _BLOB_VERSION, family,
                           net.w_in.shape[0], net.w_in.shape[1])
        body = b"".join([_pack_array(net.w_in), _pack_array(net.w_rec),
                         _pack_array(net.b1), _pack_array(net.w2),
                         struct.pack("<d", net.b2), _pack_array(net.context)])
    else:
        head = struct.pack("<4sHBII", _BLOB_MAGIC, _BLOB_VERSION, family,
                           net.centers.shape[0], net.centers.shape[1])
        body = b"".join([_pack_array(net.centers), _pack_array(net.lin_w),
                         struct.pack("<ddd", net.lin_b, net.bias, net.spread)])
    return head + body


def deserialize_net(blob: bytes):
    magic, version, family, rows, cols = struct.unpack_from("<4sHBII", blob, 0)
    if magic != _BLOB_MAGIC:
        raise ValueError("not a predictor blob")
    if version != _BLOB_VERSION:
        raise ValueError(f"unsupported blob version {version}")
    off = struct.calcsize("<4sHBII")

    def take(n):
        nonlocal off
        a = np.frombuffer(blob, dtype="<f8", count=n, offset=off).copy()
        off += 8 * n
        return a

    if family == 0:
        w1 = take(rows * cols).reshape(rows, cols)
        b1, w2 = take(rows), take(rows)
        return MlpNet(w1=w1, b1=b1, w2=w2, b2=float(take(1)[0]))
    if family == 1:
        w_in = take(rows * cols).reshape(rows, cols)
        w_rec = take(rows * rows).reshape(rows, rows)
        b1, w2 = take(rows), take(rows)
        b2 = float(take(1)[0])
        return ElmanNet(w_in=w_in, w_rec=w_rec, b1=b1, w2=w2, b2=b2, context=take(rows))
    if family == 2:
        centers = take(rows * cols).reshape(rows, cols)
        lin_w = take(rows)
        lin_b, bias, spread = take(3)
        return RbfNet(centers=centers, bias=float(bias), lin_w=lin_w,
                      lin_b=float(lin_b), spread=float(spread))
    raise ValueError(f"unknown predictor family {family}")
