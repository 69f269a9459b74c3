"""Command line entry point: ``superhost <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 tuple-cap overflow.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from pathlib import Path

from . import kernels
from .config import DEFAULT_CONFIG, ConfigError, load_config, seeded_config
from .cube import ConfigMismatch, CubeOfBitsArrays
from .distributed import (POLICIES, SketchFormatError, global_merge, partition_trace,
                          read_sketch, serialize, write_sketch)
from .estimator import FORMULAS
from .oracle import MetricsReport, exact_cardinalities, score_detection
from .recovery import DEFAULT_TUPLE_CAP, RecoveryResult, SuperHostRecord, recover_all
from .trace import (SynthSpec, Trace, TraceFormatError, int_to_ip, ip_to_int,
                    normalize_direction, read_trace, split_windows, synth_trace, write_trace)
from .update import DEFAULT_BATCH, record_stream

log = logging.getLogger("superhost")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_OVERFLOW = 0, 1, 2, 3
DEFAULT_THETA = 1024
DEFAULT_WINDOW = 300.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- shared helpers ---------------------------------------------------------
def _sketch_config(args):
    cfg = load_config(args.config) if args.config else DEFAULT_CONFIG
    if args.seed is not None:
        cfg = seeded_config(args.seed, cfg)
    return cfg


def _load_trace(args) -> Trace:
    trace = read_trace(args.trace, args.format, args.record_size)
    if args.inner_cidr:
        trace, skipped = normalize_direction(trace, args.inner_cidr)
        if skipped:
            log.warning("skipped %d pairs without exactly one inner address", skipped)
    return trace


def _windows(trace: Trace, window_seconds):
    if window_seconds is None:
        return [(None, trace)]
    return split_windows(trace, window_seconds)


def _window_path(out: Path, win, multiple: bool) -> Path:
    if win is None or not multiple:
        return out
    return out.with_name(f"{out.stem}.w{win}{out.suffix}")


def write_report(records, out, fmt: str = "csv", metrics: MetricsReport | None = None) -> None:
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["ip", "estimate", "cs_idx"])
        for rec in records:
            w.writerow([int_to_ip(rec.ip), f"{rec.estimate:.3f}", rec.cs_idx])
    else:
        out.write(f"{'ip':<16} {'estimate':>12} {'cs':>4}\n")
        for rec in records:
            out.write(f"{int_to_ip(rec.ip):<16} {rec.estimate:>12.1f} {rec.cs_idx:>4}\n")
        out.write(f"{len(records)} super host(s)\n")
    if metrics is not None:
        out.write("\n# metrics\n")
        for line in metrics.lines():
            out.write(line + "\n")


def read_report(path) -> list[SuperHostRecord]:
    recs = []
    with open(path, encoding="utf-8") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header != ["ip", "estimate", "cs_idx"]:
            raise TraceFormatError(f"{path}:1", "not a CSV detection report")
        for lineno, row in enumerate(rows, 2):
            if not row or row[0].startswith("#"):
                break
            try:
                recs.append(SuperHostRecord(ip_to_int(row[0]), float(row[1]), int(row[2])))
            except (ValueError, IndexError):
                raise TraceFormatError(f"{path}:{lineno}", f"bad report row {row!r}") from None
    return recs


def _emit(args, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- commands ---------------------------------------------------------------
def cmd_update(args) -> int:
    cfg = _sketch_config(args)
    trace = _load_trace(args)
    wins = _windows(trace, args.window_seconds)
    out = Path(args.output)
    for win, part in wins:
        cube = CubeOfBitsArrays.new(cfg)
        n = record_stream(cube, part.pairs, workers=args.workers, batch_size=args.batch_size)
        path = _window_path(out, win, len(wins) > 1)
        write_sketch(cube, path)
        log.info("window %s: %d pairs -> %s", win, n, path)
    return EXIT_OK


def cmd_merge(args) -> int:
    cube = global_merge(args.sketches)
    write_sketch(cube, args.output)
    return EXIT_OK


def _run_recovery(cube, args) -> tuple[RecoveryResult, int]:
    t0 = time.perf_counter()
    result = recover_all(cube, args.theta, args.threshold_formula, args.tuple_cap, args.workers)
    log.info("recovery took %.3f s", time.perf_counter() - t0)
    for ov in result.overflows:
        log.error("sketch %d skipped: %d tuples exceed cap %d", ov.cs_idx, ov.tuple_count, ov.cap)
    return result, (EXIT_OVERFLOW if result.overflows else EXIT_OK)


def cmd_recover(args) -> int:
    cube = read_sketch(args.sketch)
    result, code = _run_recovery(cube, args)
    metrics = None
    if args.truth_trace:
        truth_args = argparse.Namespace(trace=args.truth_trace, format=args.format,
                                        record_size=args.record_size, inner_cidr=args.inner_cidr)
        truth = exact_cardinalities(*_load_trace(truth_args).pairs)
        metrics = score_detection(result.records, truth, args.theta)
    buf = io.StringIO()
    write_report(result.records, buf, args.report_format, metrics)
    _emit(args, buf.getvalue())
    return code


def cmd_oracle(args) -> int:
    truth = exact_cardinalities(*_load_trace(args).pairs)
    hosts = sorted(truth.super_hosts(args.theta).items(), key=lambda kv: (-kv[1], kv[0]))
    buf = io.StringIO()
    buf.write("ip,cardinality\n")
    for ip, n in hosts:
        buf.write(f"{int_to_ip(ip)},{n}\n")
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    records = read_report(args.report)
    truth = exact_cardinalities(*_load_trace(args).pairs)
    metrics = score_detection(records, truth, args.theta)
    _emit(args, "\n".join(metrics.lines()) + "\n")
    return EXIT_OK


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    try:
        lo_i = int(lo)
        hi_i = int(hi) if hi else lo_i
    except ValueError:
        raise UsageError(f"bad cardinality range {text!r}") from None
    if lo_i < 1 or hi_i < lo_i:
        raise UsageError(f"bad cardinality range {text!r}")
    return lo_i, hi_i


def cmd_synth(args) -> int:
    planted = []
    for item in args.planted or []:
        count, _, rng = item.partition(":")
        if not count.isdigit():
            raise UsageError(f"bad --planted value {item!r}; expected COUNT:LO:HI")
        planted.append((int(count), _parse_range(rng)))
    spec = SynthSpec(background_hosts=args.background,
                     background_range=_parse_range(args.background_range),
                     planted=planted, duplication=args.duplication, seed=args.seed or 0,
                     duration=args.duration, start_time=args.start_time)
    trace, truth = synth_trace(spec)
    write_trace(trace, args.output, args.format, args.record_size)
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            fh.write("ip,cardinality\n")
            for ip, n in sorted(truth.cardinalities.items(), key=lambda kv: (-kv[1], kv[0])):
                fh.write(f"{int_to_ip(ip)},{n}\n")
    log.info("wrote %d records for %d hosts", len(trace), len(truth.cardinalities))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _sketch_config(args)
    trace = _load_trace(args)
    code = EXIT_OK
    buf = io.StringIO()
    for win, part in _windows(trace, args.window_seconds):
        files = []
        for k, (iip, oip) in enumerate(partition_trace(part.iip, part.oip, args.policy,
                                                       args.routers)):
            local = CubeOfBitsArrays.new(cfg)
            record_stream(local, (iip, oip), workers=args.workers, batch_size=args.batch_size)
            if args.sketch_dir:
                path = Path(args.sketch_dir) / f"router{k}{'' if win is None else f'.w{win}'}.cba"
                write_sketch(local, path)
                files.append(path)
            else:
                files.append(serialize(local))
            del local
        merged = global_merge(files)
        del files
        result, rc = _run_recovery(merged, args)
        code = max(code, rc)
        truth = exact_cardinalities(part.iip, part.oip)
        metrics = score_detection(result.records, truth, args.theta)
        if win is not None:
            buf.write(f"# window {win} ({len(part)} pairs)\n")
        write_report(result.records, buf, args.report_format, metrics)
        buf.write("\n")
    _emit(args, buf.getvalue())
    return code


# -- parser -----------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="superhost", description="Super host detection with a cube of bits arrays.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def trace_opts(sp, positional=True):
        if positional:
            sp.add_argument("trace", help="trace file")
        sp.add_argument("--format", choices=["text", "binary"], default="text")
        sp.add_argument("--record-size", type=int, choices=[8, 16], default=8,
                        help="binary record size (16 = with u64 timestamp)")
        sp.add_argument("--inner-cidr", action="append", metavar="PREFIX",
                        help="classify raw pairs: addresses in PREFIX are inner (repeatable)")

    def sketch_opts(sp):
        sp.add_argument("--config", help="key=value sketch config file")
        sp.add_argument("--seed", type=int, help="derive mangling and hash seeds from SEED")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--batch-size", type=int, default=DEFAULT_BATCH)
        sp.add_argument("--window-seconds", type=float)

    def recover_opts(sp):
        sp.add_argument("--theta", type=int, default=DEFAULT_THETA)
        sp.add_argument("--tuple-cap", type=int, default=DEFAULT_TUPLE_CAP)
        sp.add_argument("--threshold-formula", choices=FORMULAS, default="paper")
        sp.add_argument("--report-format", choices=["csv", "text"], default="csv")
        sp.add_argument("-o", "--output")

    sp = sub.add_parser("update", help="trace -> sketch file")
    trace_opts(sp)
    sketch_opts(sp)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_update)

    sp = sub.add_parser("merge", help="sketch files -> merged sketch file")
    sp.add_argument("sketches", nargs="+")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_merge)

    sp = sub.add_parser("recover", help="sketch file -> super host report")
    sp.add_argument("sketch")
    recover_opts(sp)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--truth-trace", help="trace to score the report against")
    trace_opts(sp, positional=False)
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("oracle", help="trace -> exact super hosts")
    trace_opts(sp)
    sp.add_argument("--theta", type=int, default=DEFAULT_THETA)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("evaluate", help="CSV report + trace -> FNR/FPR/FTR")
    sp.add_argument("report")
    trace_opts(sp)
    sp.add_argument("--theta", type=int, default=DEFAULT_THETA)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("synth", help="generate a synthetic trace and its truth")
    sp.add_argument("--background", type=int, default=0, help="number of background hosts")
    sp.add_argument("--background-range", default="1:100", metavar="LO:HI")
    sp.add_argument("--planted", action="append", metavar="COUNT:LO:HI",
                    help="planted hosts with cardinality in [LO, HI] (repeatable)")
    sp.add_argument("--duplication", type=float, default=1.0, help="mean packets per flow")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--duration", type=float, help="spread timestamps over this many seconds")
    sp.add_argument("--start-time", type=float, default=0.0)
    sp.add_argument("--format", choices=["text", "binary"], default="text")
    sp.add_argument("--record-size", type=int, choices=[8, 16], default=8)
    sp.add_argument("--truth", help="write ip,cardinality truth CSV here")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("pipeline", help="partition, sketch, merge, recover and score")
    trace_opts(sp)
    sketch_opts(sp)
    recover_opts(sp)
    sp.add_argument("--routers", type=int, default=1)
    sp.add_argument("--policy", choices=POLICIES, default="hash-by-pair")
    sp.add_argument("--sketch-dir", help="write per-router sketch files here")
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    log.debug("kernel backend: %s", kernels.BACKEND.name)
    if getattr(args, "routers", 1) < 1 or getattr(args, "workers", 1) < 1:
        parser.error("--routers and --workers must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"superhost: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TraceFormatError, SketchFormatError, ConfigError, ConfigMismatch, OSError) as exc:
        print(f"superhost: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"superhost: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
