import numpy as np
import pytest

from nadpcm import CodecConfig, decode, encode_with_stats, synth_signal
from nadpcm.metrics import segsnr


class CodecRun:
    """One encode/decode round trip plus its quality figures."""

    def __init__(self, buf, cfg, bitstream, stats, decoded, segsnr_db):
        self.buf = buf
        self.cfg = cfg
        self.bitstream = bitstream
        self.stats = stats
        self.decoded = decoded
        self.segsnr_db = segsnr_db


@pytest.fixture(scope="session")
def codec_runs():
    """Cached encode/decode runs keyed by (kind, nq, mode, epochs, seconds, seed).

    The acceptance criteria revisit the same cells repeatedly; caching at
    session scope keeps the suite's runtime linear in distinct cells.
    """
    cache = {}

    def run(kind, nq, mode, epochs=6, seconds=2.0, seed=0):
        key = (kind, nq, mode, epochs, seconds, seed)
        if key not in cache:
            buf = synth_signal(kind, seconds, seed)
            cfg = CodecConfig(nq=nq, predictor_mode=mode, epochs=epochs, seed=seed)
            bs, stats = encode_with_stats(buf, cfg)
            decoded = decode(bs)
            report = segsnr(buf, decoded, cfg.frame_len)
            cache[key] = CodecRun(buf, cfg, bs, stats, decoded, report.segsnr_db)
        return cache[key]

    return run


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
