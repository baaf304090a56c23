"""Exception hierarchy for the nadpcm package.

Every error raised by the library derives from :class:`NadpcmError`, so
callers (and the CLI) can catch one base class.
"""


class NadpcmError(Exception):
    """Base class for all nadpcm errors."""


class UnsupportedFormat(NadpcmError):
    """WAV file is not 16-bit mono PCM at 8000 Hz."""


class CorruptFile(NadpcmError):
    """WAV file has truncated or malformed chunks."""


class IoFailure(NadpcmError):
    """Writing an output file failed."""


class EmptySignal(NadpcmError):
    """Operation requires at least one sample."""


class CodeOutOfRange(NadpcmError):
    """Quantizer code magnitude is invalid for the stream's bit depth."""


class FrameTooShort(NadpcmError):
    """Frame does not contain enough samples to build a training set."""


class SingularNormalEquations(NadpcmError):
    """Damped least-squares system is numerically degenerate."""


class DegenerateGram(NadpcmError):
    """Linear-layer normal equations could not be solved."""


class BitstreamError(NadpcmError):
    """Base class for bitstream parsing errors."""


class BadMagic(BitstreamError):
    """Bitstream does not start with the expected magic bytes."""


class VersionMismatch(BitstreamError):
    """Bitstream was written by an incompatible format version."""


class TruncatedPayload(BitstreamError):
    """Bitstream payload length is inconsistent with its header."""
