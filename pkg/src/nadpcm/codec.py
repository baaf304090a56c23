"""Closed-loop ADPCM codec with backward-adapted neural prediction.

Encoder and decoder run the same state machine: predict the next sample
from the last 10 reconstructed samples, quantize (or read back) the
residual, reconstruct, and slide the history forward. At every frame
boundary the predictors are retrained on the frame just reconstructed;
the decoder owns an identical reconstruction, retrains to bit-identical
parameters, and so nothing but quantizer codes is ever transmitted.

The first frame uses a last-sample predictor, since no reconstructed
frame exists yet to train on.

Bitstream layout (little-endian)::

    magic "NADP" | version u16 | nq u8 | predictor_mode u8 | epochs u16
    | frame_len u32 | sample_count u64 | seed u64 | payload

The payload packs one code per padded sample, MSB-first: a sign bit
(1 = negative) then nq-1 magnitude bits, zero-padded to a byte boundary.
The signal is zero-padded to a whole number of frames before encoding
and trimmed back to sample_count after decoding.
"""

import logging
import math
import os
import struct
import tempfile
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .defaults import (
    DEFAULT_FRAME_LEN,
    NQ_CHOICES,
    PREDICTION_ORDER,
    TRAINING_EPOCH_CHOICES,
)
from .errors import (
    BadMagic,
    BitstreamError,
    DegenerateGram,
    IoFailure,
    SingularNormalEquations,
    TruncatedPayload,
    VersionMismatch,
)
from .estimators import ElmanCommitteeRegressor, MlpCommitteeRegressor, RbfNetRegressor
from .predictors import fuse
from .quantizer import QuantizedCode, dequantize, initial_state, quantize
from .signalio import SampleBuffer, frame_signal
from .training import build_trainset

log = logging.getLogger(__name__)

BITSTREAM_MAGIC = b"NADP"
BITSTREAM_VERSION = 1
_HEADER = struct.Struct("<4sHBBHIQQ")


class PredictorMode(IntEnum):
    MLP = 0
    ELMAN = 1
    RBF = 2
    COMMITTEE_MEAN = 3
    COMMITTEE_MEDIAN = 4
    LAST_SAMPLE_BASELINE = 5

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "PredictorMode":
        try:
            return cls[label.upper()]
        except KeyError:
            raise ValueError(f"unknown predictor mode: {label!r}") from None


MODE_LABELS = tuple(m.label for m in PredictorMode)


@dataclass
class CodecConfig:
    nq: int = 5
    frame_len: int = DEFAULT_FRAME_LEN
    predictor_mode: str = "committee_median"
    epochs: int = 6
    seed: int = 0

    @property
    def mode(self) -> PredictorMode:
        return PredictorMode.from_label(self.predictor_mode)

    def validate(self) -> None:
        if self.nq not in NQ_CHOICES:
            raise ValueError(f"nq must be one of {NQ_CHOICES}, got {self.nq}")
        mode = self.mode  # raises on unknown label
        if self.frame_len < 1:
            raise ValueError("frame_len must be >= 1")
        if mode != PredictorMode.LAST_SAMPLE_BASELINE and self.frame_len <= PREDICTION_ORDER:
            raise ValueError(
                f"frame_len must exceed the prediction order ({PREDICTION_ORDER}) "
                f"for trained predictor modes"
            )
        if self.epochs not in TRAINING_EPOCH_CHOICES:
            raise ValueError(f"epochs must be one of {TRAINING_EPOCH_CHOICES}, got {self.epochs}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass
class Bitstream:
    """Decodable artifact: header fields plus packed quantizer codes."""

    nq: int
    predictor_mode: int
    epochs: int
    frame_len: int
    sample_count: int
    seed: int
    payload: bytes
    version: int = BITSTREAM_VERSION

    @property
    def padded_count(self) -> int:
        return math.ceil(self.sample_count / self.frame_len) * self.frame_len

    def config(self) -> CodecConfig:
        return CodecConfig(nq=self.nq, frame_len=self.frame_len,
                           predictor_mode=PredictorMode(self.predictor_mode).label,
                           epochs=self.epochs, seed=self.seed)

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(BITSTREAM_MAGIC, self.version, self.nq,
                              self.predictor_mode, self.epochs, self.frame_len,
                              self.sample_count, self.seed)
        return header + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bitstream":
        if len(data) < _HEADER.size:
            raise TruncatedPayload(f"bitstream shorter than its {_HEADER.size}-byte header")
        magic, version, nq, mode, epochs, frame_len, count, seed = _HEADER.unpack_from(data)
        if magic != BITSTREAM_MAGIC:
            raise BadMagic(f"bad magic {magic!r}")
        if version != BITSTREAM_VERSION:
            raise VersionMismatch(f"bitstream version {version}, expected {BITSTREAM_VERSION}")
        if nq not in NQ_CHOICES:
            raise BitstreamError(f"header nq={nq} out of range")
        if mode not in set(int(m) for m in PredictorMode):
            raise BitstreamError(f"header predictor_mode={mode} unknown")
        if frame_len < 1 or count < 1:
            raise BitstreamError("header frame_len and sample_count must be positive")
        bs = cls(nq=nq, predictor_mode=mode, epochs=epochs, frame_len=frame_len,
                 sample_count=count, seed=seed, payload=data[_HEADER.size:],
                 version=version)
        expected = (bs.padded_count * nq + 7) // 8
        if len(bs.payload) != expected:
            raise TruncatedPayload(
                f"payload holds {len(bs.payload)} bytes, header implies {expected}")
        return bs

    def write(self, path) -> None:
        directory = os.path.dirname(os.path.abspath(os.fspath(path)))
        tmp_name = None
        try:
            fd, tmp_name = tempfile.mkstemp(dir=directory, suffix=".nadp.tmp")
            with os.fdopen(fd, "wb") as fh:
                fh.write(self.to_bytes())
            os.replace(tmp_name, path)
            tmp_name = None
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
        finally:
            if tmp_name is not None and os.path.exists(tmp_name):
                os.unlink(tmp_name)

    @classmethod
    def read(cls, path) -> "Bitstream":
        try:
            with open(path, "rb") as fh:
                return cls.from_bytes(fh.read())
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc


def pack_codes(signs: np.ndarray, magnitudes: np.ndarray, nq: int) -> bytes:
    """Pack codes MSB-first: sign bit (1 = negative) then nq-1 magnitude bits."""
    values = ((np.asarray(signs) < 0).astype(np.uint8) << (nq - 1)) | np.asarray(
        magnitudes, dtype=np.uint8)
    bits = np.unpackbits(values[:, None], axis=1)[:, 8 - nq:]
    flat = bits.ravel()
    return np.packbits(flat).tobytes()


def unpack_codes(payload: bytes, n_codes: int, nq: int):
    """Inverse of pack_codes; returns (signs, magnitudes)."""
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    needed = n_codes * nq
    if len(bits) < needed:
        raise TruncatedPayload(f"payload holds {len(bits)} bits, need {needed}")
    bits = bits[:needed].reshape(n_codes, nq)
    signs = np.where(bits[:, 0] == 1, -1, 1).astype(np.int8)
    weights = 1 << np.arange(nq - 2, -1, -1, dtype=np.uint8)
    magnitudes = (bits[:, 1:] * weights).sum(axis=1).astype(np.uint8)
    return signs, magnitudes


@dataclass
class CodecStats:
    """Per-run diagnostics from the encoder (or decoder) side."""

    reconstruction: np.ndarray  # trimmed to the original sample count
    fusion_records: np.ndarray  # (padded_count, 3) family-per-rank; -1 rows where unfused


class _CodecEngine:
    """Shared encode/decode state machine; one instance per stream."""

    def __init__(self, cfg: CodecConfig):
        self.cfg = cfg
        self.mode = cfg.mode
        self.q = initial_state(cfg.nq)
        self.history = np.zeros(PREDICTION_ORDER)
        self.mlp = None
        self.elman = None
        self.rbf = None
        self.elman_state = None
        fused = self.mode in (PredictorMode.COMMITTEE_MEAN, PredictorMode.COMMITTEE_MEDIAN)
        self.use_mlp = fused or self.mode == PredictorMode.MLP
        self.use_elman = fused or self.mode == PredictorMode.ELMAN
        self.use_rbf = fused or self.mode == PredictorMode.RBF
        self.fusion = "mean" if self.mode == PredictorMode.COMMITTEE_MEAN else "median"

    def _trained(self) -> bool:
        return self.mlp is not None or self.elman is not None or self.rbf is not None

    def predict_next(self):
        """Next-sample prediction from the current history; returns (x_hat, record)."""
        mode = self.mode
        if mode == PredictorMode.LAST_SAMPLE_BASELINE or not self._trained():
            return float(self.history[-1]), None
        if mode == PredictorMode.MLP:
            return self.mlp.predict_one(self.history), None
        if mode == PredictorMode.ELMAN:
            y, self.elman_state = self.elman.step(self.history, self.elman_state)
            return y, None
        if mode == PredictorMode.RBF:
            return self.rbf.predict_one(self.history), None
        m = self.mlp.predict_one(self.history)
        e, self.elman_state = self.elman.step(self.history, self.elman_state)
        r = self.rbf.predict_one(self.history)
        return fuse((m, e, r), self.fusion)

    def _retrain(self, frame_rec: np.ndarray, frame_index: int) -> None:
        """Fit fresh predictors on the reconstructed frame just completed.

        Any degenerate family keeps the entire previous bank (both codec
        ends hit the same condition, so they stay in lockstep either way).
        A freshly installed bank starts from zero feedback state.
        """
        X_y = build_trainset(frame_rec, PREDICTION_ORDER)
        X, y = X_y.inputs, X_y.targets
        cfg = self.cfg
        try:
            new_mlp = MlpCommitteeRegressor(
                epochs=cfg.epochs, seed=cfg.seed, frame_index=frame_index
            ).fit(X, y) if self.use_mlp else None
            new_elman = ElmanCommitteeRegressor(
                epochs=cfg.epochs, seed=cfg.seed, frame_index=frame_index
            ).fit(X, y) if self.use_elman else None
            new_rbf = RbfNetRegressor().fit(X, y) if self.use_rbf else None
        except (SingularNormalEquations, DegenerateGram) as exc:
            log.warning("frame %d: retraining degenerated (%s); keeping previous predictors",
                        frame_index, exc)
            return
        self.mlp, self.elman, self.rbf = new_mlp, new_elman, new_rbf
        if self.elman is not None:
            self.elman_state = self.elman.zero_state()

    def run(self, n_padded: int, samples=None, signs=None, magnitudes=None,
            progress=None):
        """Drive the per-sample loop over whole frames.

        Encoding when ``samples`` is given, decoding when ``signs`` and
        ``magnitudes`` are given. Returns (signs, magnitudes,
        reconstruction, fusion_records) over the padded length.
        """
        encoding = samples is not None
        frame_len = self.cfg.frame_len
        n_frames = n_padded // frame_len
        out_signs = np.empty(n_padded, dtype=np.int8)
        out_mags = np.empty(n_padded, dtype=np.uint8)
        rec = np.empty(n_padded)
        records = np.full((n_padded, 3), -1, dtype=np.int8)
        history = self.history
        pos = 0
        for f in range(n_frames):
            for _ in range(frame_len):
                x_hat, fused = self.predict_next()
                if encoding:
                    code, e_hat, self.q = quantize(samples[pos] - x_hat, self.q)
                    out_signs[pos] = code.sign
                    out_mags[pos] = code.magnitude
                else:
                    code = QuantizedCode(int(signs[pos]), int(magnitudes[pos]))
                    e_hat, self.q = dequantize(code, self.q)
                value = x_hat + e_hat
                if value > 1.0:
                    value = 1.0
                elif value < -1.0:
                    value = -1.0
                rec[pos] = value
                history[:-1] = history[1:]
                history[-1] = value
                if fused is not None:
                    records[pos, 0] = fused.min_family
                    records[pos, 1] = fused.median_family
                    records[pos, 2] = fused.max_family
                pos += 1
            if progress is not None:
                progress(f + 1, n_frames)
            wants_training = self.use_mlp or self.use_elman or self.use_rbf
            if wants_training and f + 1 < n_frames:
                self._retrain(rec[f * frame_len:(f + 1) * frame_len], f)
        if encoding:
            return out_signs, out_mags, rec, records
        return signs, magnitudes, rec, records


def encode_with_stats(buf: SampleBuffer, cfg: CodecConfig, progress=None):
    """Encode a buffer; returns (Bitstream, CodecStats).

    The stats carry the encoder's internal reconstruction, which by
    construction equals what decode() will produce from the bitstream.
    """
    cfg.validate()
    buf.validate()
    frames = frame_signal(buf, cfg.frame_len)
    padded = np.concatenate([f.samples for f in frames])
    engine = _CodecEngine(cfg)
    signs, mags, rec, records = engine.run(len(padded), samples=padded, progress=progress)
    bs = Bitstream(nq=cfg.nq, predictor_mode=int(cfg.mode), epochs=cfg.epochs,
                   frame_len=cfg.frame_len, sample_count=len(buf), seed=cfg.seed,
                   payload=pack_codes(signs, mags, cfg.nq))
    return bs, CodecStats(reconstruction=rec[:len(buf)], fusion_records=records)


def encode(buf: SampleBuffer, cfg: CodecConfig, progress=None) -> Bitstream:
    bs, _ = encode_with_stats(buf, cfg, progress=progress)
    return bs


def decode_with_stats(bs: Bitstream, progress=None):
    """Decode a bitstream; returns (SampleBuffer, CodecStats)."""
    cfg = bs.config()
    cfg.validate()
    signs, mags = unpack_codes(bs.payload, bs.padded_count, bs.nq)
    engine = _CodecEngine(cfg)
    _, _, rec, records = engine.run(bs.padded_count, signs=signs, magnitudes=mags,
                                    progress=progress)
    trimmed = rec[:bs.sample_count]
    return SampleBuffer(trimmed), CodecStats(reconstruction=trimmed, fusion_records=records)


def decode(bs: Bitstream, progress=None) -> SampleBuffer:
    out, _ = decode_with_stats(bs, progress=progress)
    return out
