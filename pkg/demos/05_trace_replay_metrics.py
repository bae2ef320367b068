"""Traces: append-only event logs that replay bit-for-bit.

A run writes a newline-delimited JSON trace (header + events).  Replay
re-executes the header's script from the header's seed and diffs every
event; zero divergences means the file is an honest record.  The same
events also yield the latency/hold metrics.
"""

import tempfile
from pathlib import Path

from rhino import (
    compute_metrics,
    load_bundled,
    read_trace,
    run_script,
    verify_trace,
    write_trace,
)

scenario = load_bundled("dining")
script = [
    {"from_tick": 0, "to_tick": 60, "intention": "Pointing Can"},
    {"from_tick": 60, "to_tick": 90, "intention": "Cancel"},
]
result = run_script(scenario, script, seed=11, ticks=300, scenario_ref="dining")

path = Path(tempfile.mkdtemp()) / "episode.trace.jsonl"
write_trace(path, result.header, result.events)
print(f"wrote {path} ({path.stat().st_size} bytes)\n")
print(path.read_text().splitlines()[0][:100] + " ...\n")

# read it back and re-run the header's script: every event must match
header, events = read_trace(path)
report = verify_trace(header, events)
print(f"replay: {report.ticks} ticks, {report.events_actual} events, "
      f"{len(report.divergences)} divergences -> ok={report.ok}\n")

metrics = compute_metrics(header, events)
print(f"reaction latencies (intention seen -> skill start): "
      f"{metrics.reaction_latencies} ticks")
print(f"interruption latencies: {metrics.interruption_latencies} ticks")
for skill_id, counts in sorted(metrics.skill_counts.items()):
    print(f"  {scenario.skill(skill_id).name:12s} {counts}")
