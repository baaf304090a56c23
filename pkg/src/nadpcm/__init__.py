"""Waveform speech codec with backward-adaptive neural prediction.

An ADPCM codec whose per-sample predictor is retrained every frame on
the previously decoded samples, so encoder and decoder keep identical
predictors without transmitting any coefficients. Three predictor
families (feedforward committee, recurrent committee, radial basis net)
can run alone or fused by mean/median.
"""

__version__ = "0.1.0"

from .codec import (
    Bitstream,
    CodecConfig,
    PredictorMode,
    decode,
    decode_with_stats,
    encode,
    encode_with_stats,
)
from .errors import NadpcmError
from .estimators import ElmanCommitteeRegressor, MlpCommitteeRegressor, RbfNetRegressor
from .metrics import order_stats, run_experiment, segsnr, snr_frame
from .signalio import SampleBuffer, frame_signal, load_wav, write_wav
from .synth import synth_signal

__all__ = [
    "Bitstream",
    "CodecConfig",
    "ElmanCommitteeRegressor",
    "MlpCommitteeRegressor",
    "NadpcmError",
    "PredictorMode",
    "RbfNetRegressor",
    "SampleBuffer",
    "decode",
    "decode_with_stats",
    "encode",
    "encode_with_stats",
    "frame_signal",
    "load_wav",
    "order_stats",
    "run_experiment",
    "segsnr",
    "snr_frame",
    "synth_signal",
    "write_wav",
    "__version__",
]
