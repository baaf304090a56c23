"""Command-line front end.

Subcommands: encode, decode, eval, grid, synth. All configuration lives
in flags and the bitstream header (there are no config files), so any
invocation is reproducible from its command line alone. Exit codes:
0 success, 1 runtime error, 2 usage error.
"""

import argparse
import glob
import os
import sys

from . import __version__
from .codec import Bitstream, CodecConfig, MODE_LABELS, decode, encode_with_stats
from .defaults import DEFAULT_FRAME_LEN, NQ_CHOICES, TRAINING_EPOCH_CHOICES
from .errors import NadpcmError
from .metrics import run_experiment, segsnr, write_aggregate_csv, write_per_file_csv
from .signalio import load_wav, write_wav
from .synth import SYNTH_KINDS, synth_signal


def _positive_seconds(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value <= 60.0:
        raise argparse.ArgumentTypeError("seconds must be in (0, 60]")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _int_list(choices, label):
    def parse(text: str):
        try:
            values = [int(v) for v in text.split(",") if v]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad {label} list: {text!r}") from None
        for v in values:
            if v not in choices:
                raise argparse.ArgumentTypeError(f"{label} must be in {choices}, got {v}")
        if not values:
            raise argparse.ArgumentTypeError(f"empty {label} list")
        return values
    return parse


def _mode_list(text: str):
    values = [v for v in text.split(",") if v]
    for v in values:
        if v not in MODE_LABELS:
            raise argparse.ArgumentTypeError(f"unknown mode {v!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty mode list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nadpcm",
        description="Waveform speech codec with backward-adaptive neural prediction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a WAV file to a bitstream")
    p.add_argument("input", help="input WAV (16-bit mono PCM, 8 kHz)")
    p.add_argument("output", help="output bitstream path")
    p.add_argument("--nq", type=int, choices=NQ_CHOICES, default=5,
                   help="quantizer bits per sample (default 5)")
    p.add_argument("--mode", choices=MODE_LABELS, default="committee_median",
                   help="predictor mode (default committee_median)")
    p.add_argument("--epochs", type=int, choices=TRAINING_EPOCH_CHOICES, default=6,
                   help="training epochs per committee member (default 6)")
    p.add_argument("--frame-len", type=int, default=DEFAULT_FRAME_LEN,
                   help=f"samples per frame (default {DEFAULT_FRAME_LEN})")
    p.add_argument("--seed", type=_seed, default=0,
                   help="64-bit training seed stored in the header (default 0)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a bitstream to a WAV file")
    p.add_argument("input", help="input bitstream")
    p.add_argument("output", help="output WAV path")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="segmental SNR of a decoded file against a reference")
    p.add_argument("reference", help="original WAV")
    p.add_argument("degraded", help="decoded/processed WAV")
    p.add_argument("--frame-len", type=int, default=DEFAULT_FRAME_LEN)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a deterministic test signal")
    p.add_argument("output", help="output WAV path")
    p.add_argument("--kind", choices=SYNTH_KINDS, default="ar")
    p.add_argument("--seconds", type=_positive_seconds, default=2.0)
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("grid", help="SEGSNR table over a corpus and config grid")
    p.add_argument("corpus", help="directory of WAV files")
    p.add_argument("output", help="per-file CSV path (aggregate CSV derived from it)")
    p.add_argument("--nq-list", type=_int_list(NQ_CHOICES, "nq"), default=list(NQ_CHOICES),
                   help="comma-separated nq values (default 2,3,4,5)")
    p.add_argument("--mode-list", type=_mode_list, default=["committee_median"],
                   help="comma-separated predictor modes")
    p.add_argument("--epochs-list", type=_int_list(TRAINING_EPOCH_CHOICES, "epochs"),
                   default=[6], help="comma-separated epoch counts (default 6)")
    p.add_argument("--frame-len", type=int, default=DEFAULT_FRAME_LEN)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--agg-csv", default=None,
                   help="aggregate CSV path (default: <output stem>_agg.csv)")
    p.set_defaults(func=cmd_grid)
    return parser


def cmd_encode(args) -> int:
    buf = load_wav(args.input)
    cfg = CodecConfig(nq=args.nq, frame_len=args.frame_len, predictor_mode=args.mode,
                      epochs=args.epochs, seed=args.seed)
    cfg.validate()

    def report(done, total):
        print(f"frame {done}/{total}", file=sys.stderr)

    bs, stats = encode_with_stats(buf, cfg, progress=report)
    bs.write(args.output)
    quality = segsnr(buf.samples, stats.reconstruction, cfg.frame_len)
    print(f"encoded {len(buf)} samples to {args.output}")
    print(f"segsnr_db={quality.segsnr_db:.4f} frames_excluded={quality.n_excluded}")
    return 0


def cmd_decode(args) -> int:
    bs = Bitstream.read(args.input)
    buf = decode(bs)
    write_wav(args.output, buf)
    print(f"decoded {len(buf)} samples to {args.output}")
    return 0


def cmd_eval(args) -> int:
    ref = load_wav(args.reference)
    deg = load_wav(args.degraded)
    if len(ref) != len(deg):
        print(f"error: length mismatch ({len(ref)} vs {len(deg)} samples)", file=sys.stderr)
        return 1
    report = segsnr(ref, deg, args.frame_len)
    print(f"segsnr_db={report.segsnr_db:.4f} frames={report.n_frames} "
          f"zero_error={report.n_zero_error} zero_signal={report.n_zero_signal}")
    return 0


def cmd_synth(args) -> int:
    buf = synth_signal(args.kind, args.seconds, args.seed)
    write_wav(args.output, buf)
    print(f"wrote {len(buf)} samples ({args.kind}) to {args.output}")
    return 0


def cmd_grid(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.corpus, "*.wav")))
    if not paths:
        print(f"error: no WAV files in {args.corpus}", file=sys.stderr)
        return 1
    configs = [CodecConfig(nq=nq, frame_len=args.frame_len, predictor_mode=mode,
                           epochs=epochs, seed=args.seed)
               for nq in args.nq_list for mode in args.mode_list
               for epochs in args.epochs_list]

    def report(path, cfg, value):
        print(f"{os.path.basename(path)} nq={cfg.nq} mode={cfg.predictor_mode} "
              f"epochs={cfg.epochs}: {value:.3f} dB", file=sys.stderr)

    result = run_experiment(paths, configs, progress=report)
    agg_path = args.agg_csv
    if agg_path is None:
        stem, ext = os.path.splitext(args.output)
        agg_path = f"{stem}_agg{ext or '.csv'}"
    write_per_file_csv(args.output, result)
    write_aggregate_csv(agg_path, result)
    print(f"wrote {args.output} and {agg_path}")
    if result.failures:
        print(f"error: {len(result.failures)} grid cells failed", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NadpcmError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
