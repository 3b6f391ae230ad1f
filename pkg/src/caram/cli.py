"""``caram`` command line: run experiments, handle traces, check configs.

Exit codes: 0 success, 2 invalid input (config, trace, arguments),
3 a run detected an internal invariant breach.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from caram.controller import ConfigError
from caram.controller.simulator import SimulationError
from caram.experiment import build_experiment, execute, load_config, load_preset, preset_names, write_outputs
from caram.metrics import format_table
from caram.traceio import (
    SpecError,
    SyntheticTraceSpec,
    TraceFormatError,
    generate_synthetic,
    line_stats,
    native,
    parse_trace,
    trace_stats,
)
from caram.workloads import WORKLOADS

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BREACH = 3

log = logging.getLogger("caram")


def _fail(msg, code=EXIT_INVALID):
    print(f"caram: error: {msg}", file=sys.stderr)
    return code


def _on_off(v):
    v = v.lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {v!r}")


def _experiment(args):
    if args.config and args.preset:
        raise ConfigError(["give either --config or --preset, not both"])
    if args.preset:
        data, base = load_preset(args.preset), Path(".")
    elif args.config:
        data, base = load_config(args.config)
    else:
        raise ConfigError(["one of --config or --preset is required"])
    return build_experiment(
        data, base, seed=args.seed, timing_preset=args.timing_preset, energy_preset=args.energy_preset,
        charge_metadata=args.charge_metadata, jobs=getattr(args, "jobs", None),
    )


def cmd_run(args) -> int:
    try:
        spec = _experiment(args)
    except ConfigError as e:
        return _fail("invalid config:\n  " + "\n  ".join(e.problems))
    out = Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        return _fail(f"output directory {out} is not empty (use --force to overwrite)")
    try:
        reports = execute(spec)
    except (TraceFormatError, SpecError) as e:
        return _fail(f"bad trace: {e}")
    except SimulationError as e:
        return _fail(f"invariant breach: {e}", EXIT_BREACH)
    write_outputs(spec, reports, out)
    print(format_table(reports), end="")
    bad = [r for r in reports if not r.ok]
    for r in bad:
        for v in r.invariant_violations:
            print(f"caram: invariant breach in {r.workload}/{r.arch}: {v}", file=sys.stderr)
    return EXIT_BREACH if bad else EXIT_OK


def cmd_check(args) -> int:
    try:
        spec = _experiment(args)
    except ConfigError as e:
        print("config problems:")
        for p in e.problems:
            print(f"  - {p}")
        return EXIT_INVALID
    print(f"ok: {len(spec.runs)} runs")
    for r in spec.runs:
        print(f"  {r.run_id}: {r.arch.kind}, {r.arch.capacity_bytes} B, "
              f"timing={r.timing_preset}, energy={r.energy_preset}, seed={r.seed}")
    return EXIT_OK


def _print_stats(title, stats):
    print(title)
    print(f"  {'':8}{'total':>12}{'unique':>12}")
    for op in ("read", "write"):
        print(f"  {op + 's':8}{stats[op + '_total']:>12}{stats[op + '_unique']:>12}")


def cmd_trace_inspect(args) -> int:
    try:
        fmt = args.format or ("native" if args.path.endswith(".clt") else "fiu")
        if fmt == "native" and native.peek_kind(args.path) == native.KIND_LINES:
            _print_stats(f"{args.path}: line trace", line_stats(native.read_lines(args.path)))
            return EXIT_OK
        records = parse_trace(args.path, fmt)
    except (OSError, TraceFormatError) as e:
        return _fail(str(e))
    _print_stats(f"{args.path}: blocks", trace_stats(records))
    skipped = getattr(records, "skipped", 0)
    if skipped:
        print(f"  skipped {skipped} malformed lines (first at line {records.first_bad_line})")
    return EXIT_OK


def cmd_trace_convert(args) -> int:
    try:
        records = parse_trace(args.src, "fiu")
    except (OSError, TraceFormatError) as e:
        return _fail(str(e))
    native.write_records(args.dst, records)
    print(f"wrote {len(records)} block records to {args.dst}")
    return EXIT_OK


def cmd_trace_generate(args) -> int:
    if args.seed is None:
        return _fail("--seed is required for trace generation")
    try:
        if args.spec:
            stanza = yaml.safe_load(Path(args.spec).read_text())
            if not isinstance(stanza, dict):
                return _fail(f"{args.spec}: expected a mapping of synthetic trace fields")
            spec = SyntheticTraceSpec(**{**stanza, "rng_seed": args.seed})
        elif args.workload:
            if args.workload not in WORKLOADS:
                return _fail(f"unknown workload {args.workload!r} (known: {', '.join(WORKLOADS)})")
            spec = WORKLOADS[args.workload].synthetic_spec(args.seed, total_lines=args.lines)
        else:
            return _fail("give --workload or --spec")
        spec.validate()
    except (OSError, TypeError, SpecError, yaml.YAMLError) as e:
        return _fail(str(e))
    native.write_lines(args.out, generate_synthetic(spec))
    print(f"wrote {spec.total_lines} line requests to {args.out}")
    return EXIT_OK


def _experiment_flags(p):
    src = p.add_argument_group("experiment source")
    src.add_argument("--config", help="YAML experiment config")
    src.add_argument("--preset", help=f"built-in config: {', '.join(preset_names())}")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--timing-preset", help="device timing preset (table1, realistic)")
    p.add_argument("--energy-preset", help="energy constants preset")
    p.add_argument("--charge-metadata", type=_on_off, metavar="on|off",
                   help="count AMT/LFI bytes in the occupation ratio")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caram", description="Content-aware hybrid memory simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment and write reports")
    _experiment_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, help="parallel simulations (default from config, else 1)")
    p.add_argument("--force", action="store_true", help="write into a non-empty output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="validate a config without running it")
    _experiment_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("trace", help="trace tools")
    tsub = p.add_subparsers(dest="trace_command", required=True)
    q = tsub.add_parser("inspect", help="print read/write totals and unique counts")
    q.add_argument("path")
    q.add_argument("--format", choices=("fiu", "native"))
    q.set_defaults(func=cmd_trace_inspect)
    q = tsub.add_parser("convert", help="convert an FIU trace to the native format")
    q.add_argument("src")
    q.add_argument("dst")
    q.set_defaults(func=cmd_trace_convert)
    q = tsub.add_parser("generate", help="write a synthetic line trace")
    q.add_argument("--workload", help=f"calibration: {', '.join(WORKLOADS)}")
    q.add_argument("--spec", help="YAML stanza of synthetic trace fields")
    q.add_argument("--lines", type=int, help="total line requests (workload mode)")
    q.add_argument("--seed", type=int)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_trace_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
