"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 partial batch failure,
3 I/O or subprocess fatal error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .bd import (
    LOWER_BETTER,
    HIGHER_BETTER,
    BdError,
    NoOverlapError,
    aggregate_bd,
    bd_delta,
    read_curves_csv,
    write_bd_csv,
    write_curves_csv,
)
from .csf import CsfModel, csf_table
from .harness import ConfigError, InvalidEnergyError, JoinError, collect_results, load_config, plan, run_pipeline
from .pruning import apply_mask, build_mask, mask_stats, write_mask_stats
from .spectrum import MemoryBudgetError, dump_magnitude_slice, forward_fft, inverse_fft
from .temporal import DownscaleSpec, downscale_temporal
from .video_io import VideoFormatError, infer_format, read_video, write_video

logger = logging.getLogger("stprune")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 910x512, got {text!r}")


def _add_video_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--size", type=_parse_size, help="WxH, required for raw .yuv input")
    p.add_argument("--fps", type=float, help="frame rate, required for raw .yuv input")
    p.add_argument("--input-format", choices=["raw-yuv", "y4m"])
    p.add_argument("--output-format", choices=["raw-yuv", "y4m"])


def _load_input(args):
    fmt = args.input_format or infer_format(args.input)
    if fmt == "raw-yuv" and (args.size is None or args.fps is None):
        raise UsageError("raw .yuv input needs --size WxH and --fps")
    w, h = args.size if args.size else (None, None)
    return read_video(args.input, fmt, w, h, args.fps)


def cmd_filter(args) -> int:
    v = _load_input(args)
    model = CsfModel(gamma_dvd=args.gamma_dvd)
    sp = forward_fft(v, args.max_coefficients)
    mask = build_mask(sp, model, args.beta, args.normalize)
    write_video(v.with_luma(inverse_fft(apply_mask(sp, mask))), args.output, args.output_format)
    logger.info("kept %d of %d coefficients at beta=%g", mask.kept_count, mask.total_count, args.beta)
    if args.dump_mask_stats:
        write_mask_stats([mask_stats(sp, mask)], args.dump_mask_stats)
    if args.dump_spectrum:
        dump_magnitude_slice(sp, args.dump_spectrum, args.dump_slice)
    return EXIT_OK


def cmd_downscale(args) -> int:
    if args.factor not in (2, 4) and not args.allow_any_factor:
        raise UsageError(f"--factor {args.factor} needs --allow-any-factor")
    v = _load_input(args)
    out = downscale_temporal(v, DownscaleSpec(args.factor, args.allow_any_factor))
    write_video(out, args.output, args.output_format)
    logger.info("%g fps -> %g fps, %d frames", v.frame_rate, out.frame_rate, out.frame_count)
    return EXIT_OK


def cmd_csf_table(args) -> int:
    try:
        direction = [float(x) for x in args.direction.split(",")]
    except ValueError:
        raise UsageError("--direction must be three comma-separated numbers")
    model = CsfModel(gamma_dvd=args.gamma_dvd)
    rows = csf_table(model, direction, args.max, args.step)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["f_hor", "f_ver", "f_temp", "f_st", "gamma"])
        for row in rows:
            writer.writerow([f"{x:.6g}" for x in row])
    finally:
        if args.output:
            fh.close()
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    if args.dry_run:
        for line in plan(cfg):
            print(line)
        return EXIT_OK
    report = run_pipeline(cfg)
    logger.info(
        "%d executed, %d skipped, %d failed; manifest %s",
        report.executed,
        report.skipped,
        len(report.failed),
        report.manifest_path,
    )
    for tid in report.failed:
        logger.error("failed: %s", tid)
    return report.exit_code


def cmd_collect(args) -> int:
    manifest = args.manifest
    if manifest.is_dir():
        manifest = manifest / "manifest.json"
    curves = collect_results(manifest, args.quality, require_valid_energy=not args.allow_invalid_energy)
    write_curves_csv(curves, args.output)
    logger.info("wrote %d curves to %s", len(curves), args.output)
    return EXIT_OK


def _pairs(args):
    tests = read_curves_csv(args.curves)
    if args.ref_curves is not None:
        refs = read_curves_csv(args.ref_curves)
        if len(refs) == 1:
            (ref,) = refs.values()
            return [(t, ref) for t in tests.values()]
        common = sorted(set(tests) & set(refs))
        if not common:
            raise UsageError("reference file has several curves and none share a label with the test file")
        return [(tests[label], refs[label]) for label in common]
    if not args.ref_label:
        raise UsageError("with a single curve file, --ref-label is required")
    pairs = []
    for label in sorted(tests):
        ref_label = args.ref_label.format(video=label.split("|", 1)[0])
        if label == ref_label:
            continue
        if ref_label not in tests:
            raise UsageError(f"reference curve {ref_label!r} not found")
        pairs.append((tests[label], tests[ref_label]))
    return pairs


def cmd_bd(args) -> int:
    metrics = ["rate", "energy"] if args.metric == "both" else [args.metric]
    results = []
    for test, ref in _pairs(args):
        for metric in metrics:
            try:
                results.append(bd_delta(test, ref, metric, args.orientation))
            except NoOverlapError as exc:
                logger.warning("skipped: %s", exc)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        write_bd_csv(results, fh)
    finally:
        if args.output:
            fh.close()
    if args.summary:
        for metric in metrics:
            values = [r for r in results if r.metric == metric]
            if values:
                s = aggregate_bd(values)
                print(
                    f"BD-{metric}: min {s.min:.2f} %  mean {s.mean:.2f} %  max {s.max:.2f} %  (n={s.count})",
                    file=sys.stderr,
                )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stprune", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="remove spectral components below the visibility threshold")
    _add_video_args(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--normalize", action="store_true", help="threshold |S|/(mean*N) instead of |S|")
    p.add_argument("--gamma-dvd", type=float, default=60.0, help="cpd per pixel (default 60)")
    p.add_argument("--max-coefficients", type=int, default=2**30)
    p.add_argument("--dump-mask-stats", type=Path, metavar="CSV")
    p.add_argument("--dump-spectrum", type=Path, metavar="CSV", help="magnitude of one temporal slice")
    p.add_argument("--dump-slice", type=int, default=0, metavar="W")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("downscale", help="frame-average to a lower frame rate")
    _add_video_args(p)
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--allow-any-factor", action="store_true")
    p.set_defaults(func=cmd_downscale)

    p = sub.add_parser("csf-table", help="print contrast sensitivity along a ray")
    p.add_argument("--direction", default="1,0,0", help="hor,ver,temp components of the ray")
    p.add_argument("--max", type=float, default=100.0)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--gamma-dvd", type=float, default=60.0)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_csf_table)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("config", type=Path)
    p.add_argument("--dry-run", action="store_true", help="print the command plan only")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("collect", help="join a run manifest with quality scores into curves")
    p.add_argument("manifest", type=Path, help="manifest.json or the run directory")
    p.add_argument("--quality", type=Path, required=True, help="CSV: video,beta,factor,crf,quality")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--allow-invalid-energy", action="store_true")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("bd", help="Bjontegaard-Delta rate/energy between curves")
    p.add_argument("curves", type=Path)
    p.add_argument("ref_curves", type=Path, nargs="?")
    p.add_argument("--ref-label", help="reference label; may contain {video}")
    p.add_argument("--metric", choices=["rate", "energy", "both"], default="both")
    p.add_argument("--orientation", choices=[LOWER_BETTER, HIGHER_BETTER], default=LOWER_BETTER)
    p.add_argument("--summary", action="store_true", help="print min/mean/max to stderr")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_bd)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ConfigError, ValueError) as exc:
        if isinstance(exc, (VideoFormatError, JoinError, InvalidEnergyError, BdError)):
            logger.error("%s", exc)
            return EXIT_FATAL
        logger.error("%s", exc)
        return EXIT_USAGE
    except (OSError, MemoryBudgetError) as exc:
        logger.error("%s", exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
