"""PCM signal I/O and framing.

The codec operates on mono 8 kHz signals normalized to [-1, 1]. WAV
support is deliberately strict: 16-bit mono PCM at 8000 Hz only, because
quantizer tuning and SEGSNR comparisons assume that rate. Anything else
is rejected rather than silently resampled.
"""

import os
import tempfile
import wave
from dataclasses import dataclass

import numpy as np

from .defaults import SAMPLE_RATE_HZ
from .errors import CorruptFile, EmptySignal, IoFailure, UnsupportedFormat

_PCM_SCALE = 32768.0


@dataclass
class SampleBuffer:
    """Mono signal with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.samples)

    def validate(self) -> None:
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sample_rate_hz != SAMPLE_RATE_HZ:
            raise UnsupportedFormat(
                f"sample rate must be {SAMPLE_RATE_HZ} Hz, got {self.sample_rate_hz}"
            )
        if len(self.samples) and (
            np.min(self.samples) < -1.0 or np.max(self.samples) > 1.0
        ):
            raise ValueError("sample amplitudes must lie in [-1, 1]")


@dataclass
class Frame:
    """Fixed-length slice of a signal; ``pad`` trailing samples are zero fill."""

    index: int
    samples: np.ndarray
    pad: int = 0


def load_wav(path) -> SampleBuffer:
    """Read a 16-bit mono 8 kHz PCM WAV file.

    Integer samples are divided by 32768, mapping the int16 range onto
    [-1, 1). Raises UnsupportedFormat for any other rate/layout and
    CorruptFile for truncated or malformed data.
    """
    try:
        with wave.open(os.fspath(path), "rb") as w:
            if w.getcomptype() != "NONE":
                raise UnsupportedFormat(f"compressed WAV not supported: {w.getcomptype()}")
            if w.getnchannels() != 1:
                raise UnsupportedFormat(f"expected mono, got {w.getnchannels()} channels")
            if w.getsampwidth() != 2:
                raise UnsupportedFormat(f"expected 16-bit samples, got {8 * w.getsampwidth()}-bit")
            if w.getframerate() != SAMPLE_RATE_HZ:
                raise UnsupportedFormat(f"expected {SAMPLE_RATE_HZ} Hz, got {w.getframerate()} Hz")
            n = w.getnframes()
            raw = w.readframes(n)
    except wave.Error as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise CorruptFile(f"{path}: truncated file") from exc
    if len(raw) != 2 * n:
        raise CorruptFile(f"{path}: header claims {n} frames, data holds {len(raw) // 2}")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM_SCALE
    return SampleBuffer(samples)


def write_wav(path, buf: SampleBuffer) -> None:
    """Write a SampleBuffer as 16-bit mono PCM WAV.

    Inverse of load_wav: round to nearest integer and clamp to the int16
    range, so a load/write round trip moves each sample by at most
    1/32768. The file is written to a temp name and renamed, never left
    half-written.
    """
    ints = np.clip(np.rint(buf.samples * _PCM_SCALE), -32768, 32767).astype("<i2")
    directory = os.path.dirname(os.path.abspath(os.fspath(path)))
    tmp_name = None
    try:
        fd, tmp_name = tempfile.mkstemp(dir=directory, suffix=".wav.tmp")
        with os.fdopen(fd, "wb") as fh:
            with wave.open(fh, "wb") as w:
                w.setnchannels(1)
                w.setsampwidth(2)
                w.setframerate(buf.sample_rate_hz)
                w.writeframes(ints.tobytes())
        os.replace(tmp_name, path)
        tmp_name = None
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    finally:
        if tmp_name is not None and os.path.exists(tmp_name):
            os.unlink(tmp_name)


def frame_signal(samples, frame_len: int) -> list[Frame]:
    """Split a signal into ceil(N / frame_len) frames.

    The last frame is zero-padded to frame_len with the pad length
    recorded; deframe() inverts this exactly.
    """
    if frame_len < 1:
        raise ValueError("frame_len must be >= 1")
    x = samples.samples if isinstance(samples, SampleBuffer) else np.asarray(samples, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise EmptySignal("cannot frame an empty signal")
    frames = []
    for idx, start in enumerate(range(0, n, frame_len)):
        chunk = x[start:start + frame_len]
        pad = frame_len - len(chunk)
        if pad:
            chunk = np.concatenate([chunk, np.zeros(pad)])
        frames.append(Frame(index=idx, samples=chunk, pad=pad))
    return frames


def deframe(frames: list[Frame]) -> np.ndarray:
    """Concatenate frames, dropping the recorded padding."""
    parts = []
    for f in frames:
        parts.append(f.samples[:len(f.samples) - f.pad] if f.pad else f.samples)
    return np.concatenate(parts)
