"""Command-line entry points: serve, replay, and the benchmark suites.

Exit codes: 0 success, 1 benchmark/assertion failure, 2 configuration
error (argparse uses 2 for bad flags on its own).
"""

from __future__ import annotations

import argparse
import logging
import signal
import sys
import threading
from dataclasses import replace

from .bridge.latency import (
    ONE_WAY_BUDGET_MS,
    PROCESSING_BUDGET_MS,
    run_latency_bench,
)
from .bridge.service import Bridge
from .errors import ConfigError, ModelError, ProtocolError
from .replay import load_script, run_replay
from .reports import Report, write_report
from .sim import REFERENCE_SUCCESS_FRACTION, load_scenario, run_grasp_benchmark
from .wire import ScaleConfig, TAG_SPECS

DEFAULT_PORT = 7777


def render_tag_table() -> str:
    """The tag registry as a markdown table (single source: TAG_SPECS)."""
    lines = [
        "# Wire tag registry",
        "",
        "Frames are ASCII lines `\"<tag> <value>\\n\"`; values are unsigned",
        "16-bit decimals.  Negative angles add 1000 to the magnitude;",
        "scaled pose values add 10×scale.  Valueless commands send value 1.",
        "",
        "| Tag | Group | Payload |",
        "| --- | --- | --- |",
    ]
    for tag, group, payload in TAG_SPECS:
        lines.append(f"| {tag} | {group} | {payload} |")
    return "\n".join(lines) + "\n"


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        default="desk",
        help="scenario file path or built-in name (default: desk)",
    )
    parser.add_argument(
        "--scale",
        type=int,
        choices=(100, 1000),
        default=100,
        help="pose fixed-point scale (default: 100)",
    )
    parser.add_argument("--seed", type=int, default=None, help="override scenario seed")


def _load(args) -> tuple:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario, ScaleConfig(args.scale)


def _maybe_write(report: Report, path: str | None) -> None:
    if path is not None:
        write_report(report, path)
        print(f"report written to {path}")


def cmd_serve(args) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(message)s", stream=sys.stderr
    )
    scenario, scale = _load(args)
    bridge = Bridge(
        scenario,
        host=args.host,
        port=args.port,
        scale=scale,
        telemetry_period=args.telemetry_period,
    )
    try:
        port = bridge.start()
    except OSError as exc:
        print(f"cannot listen on {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 2
    print(f"listening on {args.host}:{port}", flush=True)
    done = threading.Event()
    for signum in (signal.SIGINT, signal.SIGTERM):
        signal.signal(signum, lambda *_: done.set())
    done.wait()
    bridge.stop()
    mean_ms, max_ms = bridge.processing_stats()
    rtf = f"{bridge.rtf.ratio():.2f}" if bridge.rtf.ready else "n/a"
    print(
        f"handled {bridge.frames_handled} frames; "
        f"processing mean {mean_ms:.3f} ms, max {max_ms:.3f} ms; rtf {rtf}"
    )
    return 0


def cmd_replay(args) -> int:
    scenario, scale = _load(args)
    entries = load_script(args.script)
    result = run_replay(scenario, entries, scale=scale, settle_tail=args.settle_tail)
    print(f"replayed {result.entries} frames, {len(result.samples)} accuracy pairs")
    report = Report(kind="replay")
    report.meta["scenario"] = args.scenario
    report.meta["scale"] = repr(args.scale)
    report.meta["entries"] = repr(result.entries)
    if result.samples:
        for mode, stats in result.accuracy().items():
            print(f"  mode {mode}: n={stats.count} mae={stats.mae:.6g} std={stats.std:.6g}")
            report.meta[f"mode{mode}_count"] = repr(stats.count)
            report.meta[f"mode{mode}_mae"] = repr(stats.mae)
            report.meta[f"mode{mode}_std"] = repr(stats.std)
    for sample in result.samples:
        report.rows.append(
            {
                "mode": repr(sample.mode),
                "channel": sample.channel,
                "commanded": repr(sample.commanded),
                "achieved": repr(sample.achieved),
            }
        )
    _maybe_write(report, args.report)
    return 0


def cmd_bench_grasp(args) -> int:
    scenario, _scale = _load(args)
    theta = None
    if args.theta_drop_deg is not None:
        import math

        theta = math.radians(args.theta_drop_deg)
    result = run_grasp_benchmark(
        scenario,
        robot=args.robot,
        trials=args.trials,
        seed=args.seed,
        theta_drop=theta,
    )
    fraction = result.success_fraction
    print(
        f"{result.successes}/{len(result.counted)} trials succeeded "
        f"(fraction {fraction:.3f}; hardware reference {REFERENCE_SUCCESS_FRACTION})"
    )
    report = Report(kind="grasp-bench")
    report.meta["robot"] = result.robot
    report.meta["trials"] = repr(result.trials)
    report.meta["seed"] = repr(result.seed)
    report.meta["theta_drop"] = repr(result.theta_drop)
    report.meta["success_fraction"] = repr(fraction)
    report.meta["reference_success"] = repr(REFERENCE_SUCCESS_FRACTION)
    for row in result.rows:
        report.rows.append(
            {
                "index": repr(row.index),
                "spawn_x": repr(row.spawn_x),
                "spawn_y": repr(row.spawn_y),
                "phase": row.phase,
                "flags": repr(row.flags),
                "reason": row.failure_reason or "-",
                "travel": repr(row.transport_travel) if row.transport_travel is not None else "-",
                "sim_s": repr(row.sim_seconds),
            }
        )
    _maybe_write(report, args.report)
    if args.min_success is not None and fraction < args.min_success:
        print(
            f"success fraction {fraction:.3f} below required {args.min_success}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_bench_latency(args) -> int:
    scenario, _scale = _load(args)
    endpoint = None
    if args.endpoint is not None:
        host, _, port = args.endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"bad endpoint {args.endpoint!r}, want host:port")
        endpoint = (host, int(port))
    result = run_latency_bench(endpoint=endpoint, count=args.frames, scenario=scenario)
    print(f"one-way {result.one_way_ms:.4f} ms (budget {ONE_WAY_BUDGET_MS} ms)")
    if result.processing_mean_ms is not None:
        print(
            f"processing mean {result.processing_mean_ms:.4f} ms, "
            f"max {result.processing_max_ms:.4f} ms (budget {PROCESSING_BUDGET_MS} ms)"
        )
    report = Report(kind="latency")
    report.meta["frames"] = repr(args.frames)
    report.meta["rtt_mean_ms"] = repr(result.rtt_mean_ms)
    report.meta["one_way_ms"] = repr(result.one_way_ms)
    if result.processing_mean_ms is not None:
        report.meta["processing_mean_ms"] = repr(result.processing_mean_ms)
        report.meta["processing_max_ms"] = repr(result.processing_max_ms)
    _maybe_write(report, args.report)
    return 0 if result.within_budget else 1


def cmd_dump_tags(args) -> int:
    print(render_tag_table(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teleobridge",
        description="mobile-teleoperation bridge for simulated robot arms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the bridge service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    serve.add_argument("--telemetry-period", type=float, default=1.0)
    _add_scenario_flags(serve)
    serve.set_defaults(func=cmd_serve)

    rep = sub.add_parser("replay", help="inject a scripted frame session")
    rep.add_argument("script", help="script file: '<ms> <tag> <value>' lines")
    rep.add_argument("--settle-tail", type=float, default=5.0)
    rep.add_argument("--report", default=None, help="write a replay report here")
    _add_scenario_flags(rep)
    rep.set_defaults(func=cmd_replay)

    grasp = sub.add_parser("bench-grasp", help="run seeded pick-and-place trials")
    grasp.add_argument("--trials", type=int, default=40)
    grasp.add_argument("--robot", default="ur5")
    grasp.add_argument("--theta-drop-deg", type=float, default=None)
    grasp.add_argument("--min-success", type=float, default=None)
    grasp.add_argument("--report", default=None)
    _add_scenario_flags(grasp)
    grasp.set_defaults(func=cmd_bench_grasp)

    lat = sub.add_parser("bench-latency", help="measure echo round-trip latency")
    lat.add_argument("--frames", type=int, default=1000)
    lat.add_argument("--endpoint", default=None, help="host:port of a running bridge")
    lat.add_argument("--report", default=None)
    _add_scenario_flags(lat)
    lat.set_defaults(func=cmd_bench_latency)

    tags = sub.add_parser("dump-tags", help="print the wire tag registry")
    tags.set_defaults(func=cmd_dump_tags)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModelError, ProtocolError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
