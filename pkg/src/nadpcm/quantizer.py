"""Adaptive mid-rise scalar quantizer with step-size multipliers.

The residual quantizer uses 2..5 bits per sample: one sign bit and
nq-1 magnitude bits. Reconstruction levels sit at odd multiples of half
the current step (mid-rise, no zero level). After every sample the step
is multiplied by a factor chosen by the emitted magnitude (small
magnitudes shrink the step, saturated magnitudes grow it) and clamped
to [step_min, step_max].

The step trajectory depends only on the code sequence, never on the
residual values themselves, which is what lets a decoder replay it
exactly.
"""

from dataclasses import dataclass, replace

from .defaults import NQ_CHOICES, STEP_INITIAL, STEP_MAX, STEP_MIN, STEP_MULTIPLIERS
from .errors import CodeOutOfRange


@dataclass(frozen=True, slots=True)
class QuantizedCode:
    sign: int  # +1 or -1
    magnitude: int  # 0 .. 2**(nq-1) - 1


@dataclass(frozen=True, slots=True)
class JayantQuantizerState:
    nq: int
    step: float
    step_min: float = STEP_MIN
    step_max: float = STEP_MAX
    multipliers: tuple = ()

    @property
    def magnitude_max(self) -> int:
        return (1 << (self.nq - 1)) - 1

    def validate(self) -> None:
        if self.nq not in NQ_CHOICES:
            raise ValueError(f"nq must be one of {NQ_CHOICES}, got {self.nq}")
        if not (self.step_min <= self.step <= self.step_max):
            raise ValueError("step outside [step_min, step_max]")
        if len(self.multipliers) != 1 << (self.nq - 1):
            raise ValueError("multiplier table must have 2**(nq-1) entries")
        if min(self.multipliers) <= 0:
            raise ValueError("multipliers must be positive")
        if min(self.multipliers) >= 1 or max(self.multipliers) <= 1:
            raise ValueError("multiplier table must adapt both ways (one < 1 and one > 1)")


def initial_state(nq: int, step: float = STEP_INITIAL) -> JayantQuantizerState:
    """Fresh quantizer state with the default multiplier table for nq bits."""
    if nq not in STEP_MULTIPLIERS:
        raise ValueError(f"nq must be one of {NQ_CHOICES}, got {nq}")
    state = JayantQuantizerState(nq=nq, step=step, multipliers=STEP_MULTIPLIERS[nq])
    state.validate()
    return state


def _next_step(state: JayantQuantizerState, magnitude: int) -> float:
    grown = state.step * state.multipliers[magnitude]
    return min(max(grown, state.step_min), state.step_max)


def quantize(e: float, state: JayantQuantizerState):
    """Quantize a residual: returns (code, e_hat, next_state).

    magnitude = clamp(floor(|e| / step), 0, 2**(nq-1) - 1) and
    e_hat = sign(e) * (magnitude + 0.5) * step, with e = 0 mapped to
    sign +1. Total over any finite residual.
    """
    mag = int(abs(e) / state.step)
    mag_max = state.magnitude_max
    if mag > mag_max:
        mag = mag_max
    sign = -1 if e < 0 else 1
    e_hat = sign * (mag + 0.5) * state.step
    code = QuantizedCode(sign=sign, magnitude=mag)
    return code, e_hat, replace(state, step=_next_step(state, mag))


def dequantize(code: QuantizedCode, state: JayantQuantizerState):
    """Reconstruct e_hat from a code: returns (e_hat, next_state).

    Produces exactly the e_hat and step trajectory the encoder computed
    for the same code and state.
    """
    if not 0 <= code.magnitude <= state.magnitude_max:
        raise CodeOutOfRange(
            f"magnitude {code.magnitude} invalid for nq={state.nq}"
        )
    if code.sign not in (-1, 1):
        raise CodeOutOfRange(f"sign must be +1 or -1, got {code.sign}")
    e_hat = code.sign * (code.magnitude + 0.5) * state.step
    return e_hat, replace(state, step=_next_step(state, code.magnitude))
