"""Command line front end.

    sim run <scenario> [--hand-trace FILE] [--out DIR] [--ticks N]
    sim metrics <trace.csv> [--events FILE.jsonl]
    sim serve <scenario> [--host H] [--port P] [--mode visual|blind]
    sim patterns [--emit ID]

<scenario> is a JSON file path or a shipped preset name. `--seed` is
accepted everywhere and reserved: the core is deterministic and nothing
consumes randomness yet, but recorded seeds keep old command lines valid
if that ever changes.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys
from typing import Optional

from .metrics import compute_run_metrics, reaction_correctness
from .scenario import PRESET_NAMES, Scenario, ScenarioError, load_preset, load_scenario
from .sim import run_scenario
from .tactile import (
    PATTERN_LIBRARY,
    encode_pattern,
    pattern_to_device_lines,
    pattern_to_json,
)
from .traces import (
    read_events_jsonl,
    read_hand_trace,
    read_trace_csv,
    write_events_jsonl,
    write_trace_csv,
)


def resolve_scenario(ref: str) -> Scenario:
    """A path wins over a preset name; unknown references raise."""
    path = pathlib.Path(ref)
    if path.exists():
        return load_scenario(str(path))
    if ref in PRESET_NAMES:
        return load_preset(ref)
    raise FileNotFoundError(
        f"no scenario file {ref!r} and no preset of that name; "
        f"shipped presets: {', '.join(PRESET_NAMES)}")


def cmd_run(args) -> int:
    scenario = resolve_scenario(args.scenario)
    samples = read_hand_trace(args.hand_trace) if args.hand_trace else []
    trace = run_scenario(scenario, samples, n_ticks=args.ticks)

    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "trace.csv"
    events_path = out_dir / "events.jsonl"
    write_trace_csv(trace, str(trace_path))
    write_events_jsonl(trace, str(events_path))

    print(f"scenario: {scenario.name} ({trace.header.scenario_hash[:12]})")
    print(f"rows: {len(trace.rows)}  events: {len(trace.events)}")
    print(f"wrote {trace_path}")
    print(f"wrote {events_path}")
    return 0


def cmd_metrics(args) -> int:
    trace = read_trace_csv(args.trace)
    metrics = compute_run_metrics(trace)
    print(metrics.to_json())
    if args.events:
        events = read_events_jsonl(args.events)
        starts = [e for e in events if e.kind == "pattern_start"]
        curve = reaction_correctness(trace, starts)
        print()
        print(curve.to_csv())
    return 0


def cmd_serve(args) -> int:
    import asyncio

    from .server import SessionServer

    scenario = resolve_scenario(args.scenario)
    server = SessionServer(scenario, host=args.host, port=args.port, mode=args.mode)

    async def _serve():
        task = asyncio.create_task(server.serve())
        while server._server is None and not task.done():
            await asyncio.sleep(0.01)
        if task.done():
            await task  # surface the bind error
            return
        print(f"serving {scenario.name!r} on ws://{server.host}:{server.port} "
              f"({server.mode} mode); send a start control frame to run")
        sys.stdout.flush()
        if args.max_seconds is not None:
            try:
                await asyncio.wait_for(asyncio.shield(task), timeout=args.max_seconds)
            except asyncio.TimeoutError:
                task.cancel()
                try:
                    await task
                except asyncio.CancelledError:
                    pass
        else:
            await task

    try:
        asyncio.run(_serve())
    except KeyboardInterrupt:
        print("stopped")
    return 0


def cmd_patterns(args) -> int:
    if args.emit is None:
        print("id  duration_ms  frames")
        for pattern_id in sorted(PATTERN_LIBRARY):
            pattern = PATTERN_LIBRARY[pattern_id]
            print(f"{pattern_id:<3} {pattern.total_duration_ms:>11.0f}  {len(pattern.frames)}")
        return 0
    try:
        pattern = encode_pattern(args.emit)
    except KeyError:
        print(f"unknown pattern id {args.emit!r}; known: {', '.join(sorted(PATTERN_LIBRARY))}",
              file=sys.stderr)
        return 2
    print(pattern_to_json(pattern))
    for line in pattern_to_device_lines(pattern):
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="deterministic hand-guided formation simulator")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; the core is deterministic")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headlessly and write its logs")
    p_run.add_argument("scenario", help="scenario JSON path or preset name")
    p_run.add_argument("--hand-trace", default=None, help="recorded hand CSV (t,x,y,z)")
    p_run.add_argument("--out", default="out", help="output directory (default: ./out)")
    p_run.add_argument("--ticks", type=int, default=None,
                       help="override the run length in ticks")
    p_run.set_defaults(func=cmd_run)

    p_metrics = sub.add_parser("metrics", help="summarize a trace CSV")
    p_metrics.add_argument("trace", help="trace CSV produced by `sim run`")
    p_metrics.add_argument("--events", default=None,
                           help="events JSONL; adds the reaction-correctness curve")
    p_metrics.set_defaults(func=cmd_metrics)

    p_serve = sub.add_parser("serve", help="serve a live session over WebSocket")
    p_serve.add_argument("scenario", help="scenario JSON path or preset name")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--mode", choices=("visual", "blind"), default="visual")
    p_serve.add_argument("--max-seconds", type=float, default=None,
                         help=argparse.SUPPRESS)  # test/demo harness aid
    p_serve.set_defaults(func=cmd_serve)

    p_patterns = sub.add_parser("patterns", help="list patterns or emit one timeline")
    p_patterns.add_argument("--emit", default=None, metavar="ID",
                            help="pattern id to print (JSON timeline + device lines)")
    p_patterns.set_defaults(func=cmd_patterns)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
