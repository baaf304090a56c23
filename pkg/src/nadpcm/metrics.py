"""Quality metrics and experiment aggregation.

Segmental SNR averages per-frame SNR in the dB domain, which rewards
consistent quality across frames (a single loud frame cannot mask bad
quiet ones the way a global SNR lets it). Frames with zero error or zero
signal carry no ratio information and are excluded from the average,
with exclusion counts reported rather than hidden.
"""

import csv
import io
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import codec as _codec
from .errors import IoFailure, NadpcmError
from .predictors import FAMILY_LABELS
from .signalio import SampleBuffer, frame_signal, load_wav

log = logging.getLogger(__name__)


def snr_frame(x: np.ndarray, e: np.ndarray) -> float:
    """10*log10(sum(x^2) / sum(e^2)) for one frame.

    Returns +inf when e is identically zero and -inf when x is
    identically zero; callers exclude those sentinels from averages.
    """
    x = np.asarray(x, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if x.shape != e.shape:
        raise ValueError("signal and error frames must have equal length")
    signal_power = float(x @ x)
    error_power = float(e @ e)
    if signal_power == 0.0:
        return -math.inf
    if error_power == 0.0:
        return math.inf
    return 10.0 * math.log10(signal_power / error_power)


@dataclass
class SegSnrReport:
    per_frame_snr_db: np.ndarray  # finite per-frame values, excluded frames omitted
    segsnr_db: float
    n_frames: int
    n_zero_error: int = 0
    n_zero_signal: int = 0

    @property
    def n_excluded(self) -> int:
        return self.n_zero_error + self.n_zero_signal


def segsnr(x: SampleBuffer | np.ndarray, x_rec: SampleBuffer | np.ndarray,
           frame_len: int) -> SegSnrReport:
    """Segmental SNR of a reconstruction against the original.

    Splits both signals into frame_len frames, computes per-frame SNR of
    the error x - x_rec, and averages in dB. Zero-signal frames are
    checked (and excluded) before zero-error frames.
    """
    xs = x.samples if isinstance(x, SampleBuffer) else np.asarray(x, dtype=np.float64)
    rs = x_rec.samples if isinstance(x_rec, SampleBuffer) else np.asarray(x_rec, dtype=np.float64)
    if len(xs) != len(rs):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(rs)}")
    frames_x = frame_signal(xs, frame_len)
    frames_r = frame_signal(rs, frame_len)
    values = []
    zero_error = zero_signal = 0
    for fx, fr in zip(frames_x, frames_r):
        snr = snr_frame(fx.samples, fx.samples - fr.samples)
        if snr == -math.inf:
            zero_signal += 1
        elif snr == math.inf:
            zero_error += 1
        else:
            values.append(snr)
    if zero_error or zero_signal:
        log.info("segsnr: excluded %d zero-error and %d zero-signal frames",
                 zero_error, zero_signal)
    per_frame = np.asarray(values)
    mean = float(per_frame.mean()) if len(per_frame) else math.nan
    return SegSnrReport(per_frame_snr_db=per_frame, segsnr_db=mean,
                        n_frames=len(frames_x), n_zero_error=zero_error,
                        n_zero_signal=zero_signal)


@dataclass
class OrderStatsReport:
    """Frame-level count of which predictor family held each output rank."""

    min_counts: np.ndarray  # indexed by family (mlp, elman, rbf)
    median_counts: np.ndarray
    max_counts: np.ndarray
    n_frames: int

    def as_dict(self) -> dict:
        return {
            family: {
                "min": int(self.min_counts[i]),
                "median": int(self.median_counts[i]),
                "max": int(self.max_counts[i]),
            }
            for i, family in enumerate(FAMILY_LABELS)
        }


def order_stats(fusion_records: np.ndarray, frame_len: int) -> OrderStatsReport:
    """Aggregate per-sample rank attribution into per-frame counts.

    fusion_records is an (N, 3) array of family indices (min, median,
    max per sample); rows of -1 (samples predicted without fusion) are
    skipped. Within each frame the family most frequently at a rank is
    credited for that rank, ties going to the lowest family index.
    Frames with no fused samples are dropped.
    """
    records = np.asarray(fusion_records)
    if records.ndim != 2 or records.shape[1] != 3:
        raise ValueError("fusion_records must have shape (N, 3)")
    counts = np.zeros((3, 3), dtype=np.int64)  # rank x family
    n_frames = 0
    for start in range(0, len(records), frame_len):
        chunk = records[start:start + frame_len]
        chunk = chunk[chunk[:, 0] >= 0]
        if not len(chunk):
            continue
        n_frames += 1
        for rank in range(3):
            per_family = np.bincount(chunk[:, rank], minlength=3)
            counts[rank, int(np.argmax(per_family))] += 1
    return OrderStatsReport(min_counts=counts[0], median_counts=counts[1],
                            max_counts=counts[2], n_frames=n_frames)


# --- experiment grids ---------------------------------------------------------

PER_FILE_FIELDS = ("nq", "mode", "epochs", "file", "segsnr_db", "frames_excluded")
AGGREGATE_FIELDS = ("nq", "mode", "epochs", "mean_db", "std_db", "n_files")


@dataclass
class ExperimentResult:
    per_file_rows: list = field(default_factory=list)
    aggregate_rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def run_experiment(wav_paths, configs, progress=None) -> ExperimentResult:
    """Encode/decode every (file, config) cell and tabulate SEGSNR.

    Per-file rows carry each cell's SEGSNR; aggregate rows carry the
    mean and population standard deviation across files for each config.
    Failing files are recorded (and logged) instead of aborting the grid.
    """
    if not wav_paths:
        raise ValueError("no input files given")
    if not configs:
        raise ValueError("no codec configs given")
    result = ExperimentResult()
    for cfg in configs:
        cfg.validate()
        cell_values = []
        for path in wav_paths:
            try:
                buf = load_wav(path)
                bs = _codec.encode(buf, cfg)
                rec = _codec.decode(bs)
                report = segsnr(buf, rec, cfg.frame_len)
            except (NadpcmError, ValueError) as exc:
                log.error("grid cell failed (%s, nq=%d, %s): %s",
                          path, cfg.nq, cfg.predictor_mode, exc)
                result.failures.append((str(path), cfg, str(exc)))
                continue
            result.per_file_rows.append((cfg.nq, cfg.predictor_mode, cfg.epochs,
                                         os.path.basename(os.fspath(path)),
                                         report.segsnr_db, report.n_excluded))
            cell_values.append(report.segsnr_db)
            if progress is not None:
                progress(path, cfg, report.segsnr_db)
        if cell_values:
            arr = np.asarray(cell_values)
            result.aggregate_rows.append((cfg.nq, cfg.predictor_mode, cfg.epochs,
                                          float(arr.mean()), float(arr.std()),
                                          len(arr)))
    return result


def _write_atomic_text(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(os.fspath(path)))
    tmp_name = None
    try:
        fd, tmp_name = tempfile.mkstemp(dir=directory, suffix=".csv.tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
        tmp_name = None
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    finally:
        if tmp_name is not None and os.path.exists(tmp_name):
            os.unlink(tmp_name)


def _csv_text(fields, rows, float_fields) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([f"{v:.6f}" if name in float_fields else v
                         for name, v in zip(fields, row)])
    return out.getvalue()


def write_per_file_csv(path, result: ExperimentResult) -> None:
    _write_atomic_text(path, _csv_text(PER_FILE_FIELDS, result.per_file_rows,
                                       {"segsnr_db"}))


def write_aggregate_csv(path, result: ExperimentResult) -> None:
    """Aggregate table; std_db is the population standard deviation."""
    _write_atomic_text(path, _csv_text(AGGREGATE_FIELDS, result.aggregate_rows,
                                       {"mean_db", "std_db"}))
