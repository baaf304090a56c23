"""Deterministic synthetic test signals.

Desk-scale stand-ins for real recordings: a speech-like time-varying
autoregressive signal, a harmonic sweep, and white noise. All three are
reproducible from (kind, seconds, seed) alone and peak-normalize to 0.9.
"""

import numpy as np

from .defaults import SAMPLE_RATE_HZ
from .rng import SplitMix64, derive_seed
from .signalio import SampleBuffer

SYNTH_KINDS = ("ar", "tones", "noise")
_KIND_IDS = {name: i for i, name in enumerate(SYNTH_KINDS)}

# Formant-like resonance tracks for the AR kind: (start Hz, end Hz, pole radius).
# Radii fall off with frequency so the spectrum keeps a speech-like
# low-frequency tilt (lag-1 autocorrelation above 0.8).
_AR_TRACKS = (
    (300.0, 550.0, 0.98),
    (1100.0, 900.0, 0.93),
    (2300.0, 2500.0, 0.86),
    (3300.0, 3100.0, 0.78),
)
_AR_BLOCK = 40  # coefficient update interval in samples (5 ms)


def _normalize(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x))
    if peak == 0.0:
        return x
    return x * (0.9 / peak)


def _synth_ar(n: int, rng: SplitMix64) -> np.ndarray:
    excitation = rng.uniform(-1.0, 1.0, n)
    out = np.empty(n)
    hist = np.zeros(8)
    coeffs = None
    for start in range(0, n, _AR_BLOCK):
        frac = start / max(n - 1, 1)
        poles = []
        for f0, f1, radius in _AR_TRACKS:
            theta = 2.0 * np.pi * (f0 + (f1 - f0) * frac) / SAMPLE_RATE_HZ
            poles.append(radius * np.exp(1j * theta))
            poles.append(radius * np.exp(-1j * theta))
        coeffs = np.real(np.poly(poles))[1:]  # x[t] = e[t] - sum(a_k x[t-k])
        for t in range(start, min(start + _AR_BLOCK, n)):
            value = excitation[t] - float(coeffs @ hist)
            out[t] = value
            hist[1:] = hist[:-1]
            hist[0] = value
    return out


def _synth_tones(n: int, rng: SplitMix64) -> np.ndarray:
    t = np.arange(n) / SAMPLE_RATE_HZ
    duration = n / SAMPLE_RATE_HZ
    f0 = 120.0 + (60.0 / max(duration, 1e-9)) * t  # fundamental sweeps 120 -> 180 Hz
    phase = 2.0 * np.pi * np.cumsum(f0) / SAMPLE_RATE_HZ
    out = np.zeros(n)
    for k in range(1, 17):
        out += np.sin(k * phase + rng.uniform(0.0, 2.0 * np.pi)) / k
    return out


def _synth_noise(n: int, rng: SplitMix64) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, n)


def synth_signal(kind: str, seconds: float, seed: int = 0) -> SampleBuffer:
    """Generate a deterministic test signal of the given kind."""
    if kind not in _KIND_IDS:
        raise ValueError(f"kind must be one of {SYNTH_KINDS}, got {kind!r}")
    if not 0.0 < seconds <= 60.0:
        raise ValueError("seconds must be in (0, 60]")
    n = int(round(seconds * SAMPLE_RATE_HZ))
    rng = SplitMix64(derive_seed(seed, _KIND_IDS[kind]))
    if kind == "ar":
        x = _synth_ar(n, rng)
    elif kind == "tones":
        x = _synth_tones(n, rng)
    else:
        x = _synth_noise(n, rng)
    return SampleBuffer(_normalize(x))
