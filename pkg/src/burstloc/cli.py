"""burstloc command line: simulate traces, localize bursts, run the grid.

Exit codes: 0 success, 1 no burst found, 2 usage or validation error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bench import DETECTORS, PUBLISHED_CUSUM, PUBLISHED_SHEWHART, default_scenarios, emit_report, load_scenarios, run_grid
from .cpd import CusumParams, ShewhartParams
from .errors import BurstLocError, NoBurstFound, UnknownLink
from .inp_model import build_directed_graph, default_flow_field, parse_inp, read_flow_csv, reference_inp_text
from .localizer import LocalizerConfig, run_pipeline
from .transient_source import (
    BurstScenario,
    TraceConfig,
    generate_trace,
    load_replay,
    mark_completeness,
    stream,
    write_trace_csv,
)

EXIT_OK, EXIT_NO_BURST, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
BUNDLED_INP = "reference25.inp"


class UsageError(Exception):
    pass


def _load_model(path):
    if path is None or (path == BUNDLED_INP and not Path(path).exists()):
        return parse_inp(reference_inp_text())
    return parse_inp(Path(path).read_text(encoding="utf-8"))


def _banner(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print("# effective config: " + json.dumps(cfg, sort_keys=True), file=sys.stderr)


def _check_writable(path):
    if path in (None, "-"):
        return
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if p.is_dir() or not parent.is_dir() or not os.access(parent, os.W_OK) or (p.exists() and not os.access(p, os.W_OK)):
        raise UsageError(f"--out: cannot write to {path}")


def _write_output(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="")


def _burst_and_trace(args, model):
    try:
        model.pipe(args.burst_pipe)
    except UnknownLink:
        raise UsageError(f"--burst-pipe: unknown pipe {args.burst_pipe}") from None
    burst = BurstScenario(args.burst_pipe, args.burst_position, args.burst_start, args.magnitude, args.wave_speed)
    cfg = TraceConfig(args.capture_interval, args.duration, args.noise_std, args.attenuation, args.settle_time, args.seed)
    burst.validate(model)
    return burst, cfg


def cmd_simulate(args):
    _check_writable(args.out)
    model = _load_model(args.inp)
    burst, cfg = _burst_and_trace(args, model)
    frames = generate_trace(model, burst, cfg)
    _write_output(args.out, write_trace_csv(frames, model.node_ids))
    print(f"{len(frames)} frames", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def _published_row(detector, capture_interval):
    rows = PUBLISHED_CUSUM if detector == "cusum" else PUBLISHED_SHEWHART
    for row in rows:
        if abs(row.capture_interval - capture_interval) < 1e-9:
            return row
    return None


def cmd_detect(args):
    model = _load_model(args.inp)
    if args.replay:
        frames = load_replay(args.replay)
        if len(frames) < 2:
            raise UsageError("--replay: trace needs at least two frames")
        capture = frames[1].timestamp - frames[0].timestamp
    else:
        if args.burst_pipe is None:
            raise UsageError("--replay or --burst-pipe is required")
        burst, cfg = _burst_and_trace(args, model)
        frames = generate_trace(model, burst, cfg)
        capture = cfg.capture_interval
    metered = model.junction_ids
    missing = [n for n in metered if not any(n in f.readings for f in frames)]
    if missing:
        raise UsageError(f"--replay: trace has no column for metered node(s) {', '.join(missing)}")
    frames = mark_completeness(frames, metered)

    row = _published_row(args.detector, capture)
    threshold = args.threshold if args.threshold is not None else (row.threshold if row else None)
    interval = args.interval if args.interval is not None else (row.localization_interval if row else None)
    if threshold is None or interval is None:
        raise UsageError(f"--threshold and --interval are required for capture interval {capture:g} s")
    args.threshold, args.interval = threshold, interval
    _banner(args)

    params = CusumParams(threshold, args.drift) if args.detector == "cusum" else ShewhartParams(threshold)
    flows = read_flow_csv(args.flows) if args.flows else default_flow_field(model)
    graph = build_directed_graph(model, flows)
    loc_cfg = LocalizerConfig(params, interval, metered, jobs=args.jobs)
    try:
        result = run_pipeline(stream(frames, args.pacing), graph, loc_cfg, burst_time=args.burst_start)
    except NoBurstFound:
        print(json.dumps({"result": "no_burst_found"}))
        return EXIT_NO_BURST
    print(result.to_json())
    return EXIT_OK


def cmd_bench(args):
    _check_writable(args.out)
    if args.scenarios:
        scenarios = load_scenarios(args.scenarios)
        if args.detector:
            scenarios = [s for s in scenarios if s.detector == args.detector]
    elif args.detector:
        scenarios = default_scenarios(args.detector)
    else:
        raise UsageError("--detector or --scenarios is required")
    if not scenarios:
        raise UsageError("--scenarios: no scenario matches the chosen detector")
    model = _load_model(args.inp)
    flows = read_flow_csv(args.flows) if args.flows else None
    overrides = {
        "noise_std": args.noise_std,
        "rng_seed": args.seed,
        "position": args.burst_position,
        "start_time": args.burst_start,
    }
    report = run_grid(model, scenarios, overrides, flows=flows, jobs=args.jobs)
    _write_output(args.out, emit_report(report, args.format))
    for name, acc in report.accuracy_by_scenario().items():
        print(f"{name}: {float(acc):.1f}%", file=sys.stderr)
    return EXIT_OK


def _add_burst_flags(p, required):
    p.add_argument("--burst-pipe", required=required)
    p.add_argument("--burst-position", type=float, default=0.5)
    p.add_argument("--burst-start", type=float, default=10.0, help="burst time in seconds")
    p.add_argument("--magnitude", type=float, default=15.0, help="head drop at the orifice, m")
    p.add_argument("--wave-speed", type=float, default=1200.0)
    p.add_argument("--capture-interval", type=float, default=0.2)
    p.add_argument("--duration", type=float, default=40.0)
    p.add_argument("--noise-std", type=float, default=0.01)
    p.add_argument("--attenuation", type=float, default=5e-4)
    p.add_argument("--settle-time", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="burstloc", description="Real-time pipe burst localization.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="write a synthetic burst trace CSV")
    p.add_argument("--inp", default=None, help=f"INP file (default: bundled {BUNDLED_INP})")
    _add_burst_flags(p, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="localize a burst from a replayed or simulated trace")
    p.add_argument("--inp", default=None)
    p.add_argument("--replay", default=None, help="trace CSV to replay")
    _add_burst_flags(p, required=False)
    p.add_argument("--detector", choices=DETECTORS, required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--interval", type=int, default=None, help="localization interval in frames")
    p.add_argument("--pacing", choices=["fast", "realtime"], default="fast")
    p.add_argument("--flows", default=None, help="link_id,flow CSV orienting the graph")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="run every pipe x scenario and write a report")
    p.add_argument("--inp", default=None)
    p.add_argument("--detector", choices=DETECTORS, default=None)
    p.add_argument("--scenarios", default=None, help="scenario TOML file")
    p.add_argument("--noise-std", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burst-position", type=float, default=0.5)
    p.add_argument("--burst-start", type=float, default=10.0)
    p.add_argument("--flows", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default="-")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand != "detect":
        _banner(args)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"burstloc {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"burstloc {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BurstLocError, ValueError) as exc:
        print(f"burstloc {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
