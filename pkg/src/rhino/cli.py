"""Command line entry points: run scripted episodes, replay and verify
traces, print interaction metrics, emit the occupancy graph, fit the
reference recognizer, serve live sessions, and validate scenario files.

Every writer goes through a temp-file rename, so a crashed command never
leaves a half-written artifact behind.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .episode import (
    MODE_DIRECT,
    MODE_RAW,
    collect_gesture_samples,
    model_from_ref,
    run_script,
    verify_trace,
)
from .features import fit_centroids, read_samples, save_model
from .graph import OccupancyGraph
from .scenario import ScenarioError, load_scenario, resolve_scenario
from .trace import compute_metrics, read_trace, write_trace


def _write_text(path: str | Path, text: str):
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def cmd_run(args) -> int:
    scenario = resolve_scenario(args.scenario)
    entries = json.loads(Path(args.script).read_text())
    model = model_from_ref(args.model) if args.model else None
    result = run_script(
        scenario,
        entries,
        seed=args.seed,
        ticks=args.ticks,
        mode=args.mode,
        model=model,
        scenario_ref=args.scenario,
        model_ref=args.model,
        collect_features=args.emit_features is not None,
    )
    write_trace(args.out, result.header, result.events)
    if args.emit_features is not None:
        lines = [
            json.dumps({"label": label, "features": [float(v) for v in vec]})
            for label, vec in result.features
        ]
        _write_text(args.emit_features, "\n".join(lines) + "\n")
    occupancy = result.world.occupancy.format(scenario.object_names())
    print(
        f"{args.out}: {result.header.ticks} ticks, "
        f"{len(result.events)} events, occupancy {occupancy}"
    )
    return 0


def cmd_replay(args) -> int:
    header, events = read_trace(args.trace)
    report = verify_trace(header, events)
    if report.ok:
        print(
            f"{args.trace}: replay clean "
            f"({report.ticks} ticks, {report.events_expected} events)"
        )
        return 0
    print(
        f"{args.trace}: replay DIVERGED "
        f"({report.events_expected} events recorded, "
        f"{report.events_actual} replayed)"
    )
    for d in report.divergences:
        print(f"  event {d.index}: recorded {d.expected}  replayed {d.actual}")
    return 1


def cmd_metrics(args) -> int:
    header, events = read_trace(args.trace)
    scenario = resolve_scenario(header.scenario)
    m = compute_metrics(header, events)
    if args.json:
        print(json.dumps(m.to_jsonable(), indent=2, sort_keys=True))
        return 0
    print(f"trace {args.trace}: scenario {header.scenario}, {m.ticks} ticks")
    print(f"{'skill':<24} {'started':>8} {'succeeded':>10} "
          f"{'interrupted':>12} {'timed_out':>10}")
    for skill_id, row in sorted(m.skill_counts.items()):
        name = scenario.skill(skill_id).name
        print(f"{name:<24} {row['started']:>8} {row['succeeded']:>10} "
              f"{row['interrupted']:>12} {row['timed_out']:>10}")
    def ticks_ms(n: int) -> str:
        return f"{n} ticks ({1000 * n / scenario.params.tick_rate:.0f} ms)"
    if m.reaction_latencies:
        mean = sum(m.reaction_latencies) / len(m.reaction_latencies)
        print(f"reaction latency: mean {ticks_ms(round(mean))}, "
              f"n={len(m.reaction_latencies)}")
    if m.interruption_latencies:
        mean = sum(m.interruption_latencies) / len(m.interruption_latencies)
        print(f"interruption latency: mean {ticks_ms(round(mean))}, "
              f"n={len(m.interruption_latencies)}")
    print(f"hold time: {ticks_ms(m.total_hold_ticks)} over "
          f"{len(m.hold_spans)} spans, {m.open_holds} still open")
    return 0


def cmd_graph(args) -> int:
    scenario = resolve_scenario(args.scenario)
    graph = OccupancyGraph(scenario)
    dot = graph.to_dot()
    if args.out:
        _write_text(args.out, dot)
        print(f"{args.out}: {len(graph.nodes)} occupancy states, "
              f"{len(graph.edges)} edges")
    else:
        print(dot, end="")
    return 0


def cmd_fit(args) -> int:
    scenario = resolve_scenario(args.scenario)
    if args.samples:
        samples, labels = read_samples(args.samples)
    else:
        samples, labels = collect_gesture_samples(scenario, args.seed)
    model = fit_centroids(samples, labels)
    save_model(model, args.out)
    print(f"{args.out}: {len(model.classes)} intention classes from "
          f"{len(samples)} samples")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import build_app

    app = build_app(snapshot_decimation=args.snapshot_decimation)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_validate(args) -> int:
    failed = False
    for path in args.files:
        try:
            scenario = load_scenario(path)
        except ScenarioError as err:
            failed = True
            print(f"{path}: INVALID")
            for problem in err.problems:
                print(f"  {problem}")
            continue
        graph = OccupancyGraph(scenario)
        print(
            f"{path}: ok — {len(scenario.objects)} objects, "
            f"{len(scenario.skills)} skills, "
            f"{len(scenario.intentions)} intentions, "
            f"{len(graph.nodes)} occupancy states"
        )
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rhino",
        description="deterministic 30 Hz leader/follower interaction engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scripted episode, write its trace")
    run.add_argument("--scenario", required=True,
                     help="bundled name or scenario file path")
    run.add_argument("--script", required=True, help="leader script JSON file")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--ticks", type=int, default=None,
                     help="run length (defaults to the script horizon)")
    run.add_argument("--out", default="episode.trace.jsonl")
    run.add_argument("--mode", choices=[MODE_DIRECT, MODE_RAW],
                     default=MODE_DIRECT)
    run.add_argument("--model", default=None,
                     help="recognizer for raw mode: a model file or fit:<seed>:<scenario>")
    run.add_argument("--emit-features", default=None, metavar="FILE",
                     help="also write per-tick labelled feature vectors (JSONL)")
    run.set_defaults(fn=cmd_run)

    replay = sub.add_parser("replay", help="re-run a trace and verify it")
    replay.add_argument("--trace", required=True)
    replay.set_defaults(fn=cmd_replay)

    metrics = sub.add_parser("metrics", help="interaction metrics from a trace")
    metrics.add_argument("--trace", required=True)
    metrics.add_argument("--json", action="store_true")
    metrics.set_defaults(fn=cmd_metrics)

    graph = sub.add_parser("graph", help="occupancy transition graph as DOT")
    graph.add_argument("--scenario", required=True)
    graph.add_argument("--out", default=None, help="write DOT here instead of stdout")
    graph.set_defaults(fn=cmd_graph)

    fit = sub.add_parser("fit", help="fit the reference recognizer")
    fit.add_argument("--scenario", required=True)
    fit.add_argument("--out", required=True, help="model JSON output path")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--samples", default=None,
                     help="labelled feature JSONL (default: static gesture harvest)")
    fit.set_defaults(fn=cmd_fit)

    serve = sub.add_parser("serve", help="serve live sessions over HTTP/WebSocket")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--snapshot-decimation", type=int, default=3)
    serve.set_defaults(fn=cmd_serve)

    validate = sub.add_parser("validate", help="check scenario files")
    validate.add_argument("files", nargs="+")
    validate.set_defaults(fn=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
