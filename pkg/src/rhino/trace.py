"""Append-only event traces: schema, ordering discipline, serialization,
divergence diffing and run metrics.

A trace file is JSONL: one header line, then one line per event.  Events
carry integer/string payloads only (never floats), so byte-identical
traces are a meaningful equality test across runs and machines.  Within a
tick, events follow a fixed kind order; the log refuses appends that
violate it, which keeps every producer honest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

INTENTION_OBSERVED = "intention_observed"
INTENTION_STABLE = "intention_stable"
SAFETY_HALT = "safety_halt"
SAFETY_RESUME = "safety_resume"
SKILL_SUCCEEDED = "skill_succeeded"
SKILL_TIMED_OUT = "skill_timed_out"
OCCUPANCY_CHANGED = "occupancy_changed"
SKILL_INTERRUPTED = "skill_interrupted"
PATH_PLANNED = "path_planned"
SKILL_STARTED = "skill_started"
DIAGNOSTIC = "diagnostic"

# fixed within-tick ordering of event kinds
KIND_ORDER = {
    INTENTION_OBSERVED: 0,
    INTENTION_STABLE: 1,
    SAFETY_HALT: 2,
    SAFETY_RESUME: 3,
    SKILL_SUCCEEDED: 4,
    SKILL_TIMED_OUT: 5,
    OCCUPANCY_CHANGED: 6,
    SKILL_INTERRUPTED: 7,
    PATH_PLANNED: 8,
    SKILL_STARTED: 9,
    DIAGNOSTIC: 10,
}

TRACE_FORMAT = 1


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    kind: str
    data: tuple[tuple[str, Any], ...] = ()

    def payload(self) -> dict:
        return dict(self.data)

    def to_jsonable(self) -> dict:
        return {"tick": self.tick, "kind": self.kind, **self.payload()}


def _event(tick: int, kind: str, **data) -> TraceEvent:
    return TraceEvent(tick=tick, kind=kind, data=tuple(sorted(data.items())))


def intention_observed(tick: int, intention: int) -> TraceEvent:
    return _event(tick, INTENTION_OBSERVED, intention=intention)


def intention_stable(tick: int, intention: int, streak: int) -> TraceEvent:
    return _event(tick, INTENTION_STABLE, intention=intention, streak=streak)


def safety_halt(tick: int, robot_point: int, hand_point: int) -> TraceEvent:
    return _event(tick, SAFETY_HALT, robot_point=robot_point, hand_point=hand_point)


def safety_resume(tick: int) -> TraceEvent:
    return _event(tick, SAFETY_RESUME)


def skill_succeeded(tick: int, skill: int) -> TraceEvent:
    return _event(tick, SKILL_SUCCEEDED, skill=skill)


def skill_timed_out(tick: int, skill: int) -> TraceEvent:
    return _event(tick, SKILL_TIMED_OUT, skill=skill)


def occupancy_changed(tick: int, left: int | None, right: int | None) -> TraceEvent:
    return _event(tick, OCCUPANCY_CHANGED, left=left, right=right)


def skill_interrupted(tick: int, skill: int, reverse: int | None) -> TraceEvent:
    return _event(tick, SKILL_INTERRUPTED, skill=skill, reverse=reverse)


def path_planned(tick: int, path: list[int], target: int) -> TraceEvent:
    return _event(tick, PATH_PLANNED, path=tuple(path), target=target)


def skill_started(tick: int, skill: int, reason: str) -> TraceEvent:
    return _event(tick, SKILL_STARTED, skill=skill, reason=reason)


def diagnostic(tick: int, code: str, detail: str = "") -> TraceEvent:
    return _event(tick, DIAGNOSTIC, code=code, detail=detail)


class TraceOrderError(ValueError):
    pass


class EventLog:
    """Append-only event sequence enforcing tick monotonicity and the fixed
    within-tick kind order."""

    def __init__(self):
        self.events: list[TraceEvent] = []

    def append(self, event: TraceEvent):
        if event.kind not in KIND_ORDER:
            raise TraceOrderError(f"unknown event kind {event.kind!r}")
        if self.events:
            last = self.events[-1]
            if event.tick < last.tick:
                raise TraceOrderError(
                    f"tick went backwards: {last.tick} -> {event.tick}"
                )
            if event.tick == last.tick and KIND_ORDER[event.kind] < KIND_ORDER[last.kind]:
                raise TraceOrderError(
                    f"kind order violated at tick {event.tick}: "
                    f"{last.kind} -> {event.kind}"
                )
        self.events.append(event)

    def extend(self, events: Iterable[TraceEvent]):
        for e in events:
            self.append(e)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


@dataclass(frozen=True)
class TraceHeader:
    scenario: str
    seed: int
    ticks: int
    mode: str = "direct"
    script: tuple = ()  # normalized script entries, jsonable
    model: str | None = None  # recognizer path, for re-running raw-mode traces
    format: int = TRACE_FORMAT

    def to_jsonable(self) -> dict:
        doc = {
            "kind": "header",
            "format": self.format,
            "scenario": self.scenario,
            "seed": self.seed,
            "ticks": self.ticks,
            "mode": self.mode,
            "script": [dict(e) if not isinstance(e, dict) else e for e in self.script],
        }
        if self.model is not None:
            doc["model"] = self.model
        return doc


def event_to_line(event: TraceEvent) -> str:
    return json.dumps(event.to_jsonable(), sort_keys=True, separators=(",", ":"))


def event_from_jsonable(doc: dict) -> TraceEvent:
    tick = doc["tick"]
    kind = doc["kind"]
    data = {k: v for k, v in doc.items() if k not in ("tick", "kind")}
    # JSON arrays come back as lists; canonicalize to tuples
    data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    return TraceEvent(tick=tick, kind=kind, data=tuple(sorted(data.items())))


def dump_trace(header: TraceHeader, events: Iterable[TraceEvent]) -> str:
    lines = [json.dumps(header.to_jsonable(), sort_keys=True, separators=(",", ":"))]
    lines.extend(event_to_line(e) for e in events)
    return "\n".join(lines) + "\n"


def write_trace(path: str | Path, header: TraceHeader, events: Iterable[TraceEvent]):
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(dump_trace(header, events))
    tmp.replace(path)


def parse_trace(text: str) -> tuple[TraceHeader, list[TraceEvent]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trace")
    head = json.loads(lines[0])
    if head.get("kind") != "header":
        raise ValueError("first trace line must be the header")
    header = TraceHeader(
        scenario=head["scenario"],
        seed=head["seed"],
        ticks=head["ticks"],
        mode=head.get("mode", "direct"),
        script=tuple(tuple(sorted(e.items())) for e in head.get("script", [])),
        model=head.get("model"),
        format=head.get("format", TRACE_FORMAT),
    )
    log = EventLog()
    for ln in lines[1:]:
        log.append(event_from_jsonable(json.loads(ln)))
    return header, log.events


def read_trace(path: str | Path) -> tuple[TraceHeader, list[TraceEvent]]:
    return parse_trace(Path(path).read_text())


@dataclass
class Divergence:
    index: int
    expected: dict | None
    actual: dict | None


@dataclass
class VerificationReport:
    ticks: int
    events_expected: int
    events_actual: int
    divergences: list[Divergence] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.divergences and self.events_expected == self.events_actual


MAX_REPORTED_DIVERGENCES = 20


def diff_events(
    expected: list[TraceEvent], actual: list[TraceEvent], ticks: int
) -> VerificationReport:
    report = VerificationReport(
        ticks=ticks, events_expected=len(expected), events_actual=len(actual)
    )
    for i in range(max(len(expected), len(actual))):
        e = expected[i].to_jsonable() if i < len(expected) else None
        a = actual[i].to_jsonable() if i < len(actual) else None
        if e != a:
            report.divergences.append(Divergence(index=i, expected=e, actual=a))
            if len(report.divergences) >= MAX_REPORTED_DIVERGENCES:
                break
    return report


@dataclass
class Metrics:
    ticks: int
    skill_counts: dict[int, dict[str, int]]
    reaction_latencies: list[int]
    interruption_latencies: list[int]
    hold_spans: list[tuple[int, int]]  # (halt tick, resume tick); open holds omitted
    open_holds: int

    @property
    def total_hold_ticks(self) -> int:
        return sum(b - a for a, b in self.hold_spans)

    def to_jsonable(self) -> dict:
        return {
            "ticks": self.ticks,
            "skills": {
                str(k): dict(v) for k, v in sorted(self.skill_counts.items())
            },
            "reaction_latencies": list(self.reaction_latencies),
            "interruption_latencies": list(self.interruption_latencies),
            "hold_spans": [list(s) for s in self.hold_spans],
            "open_holds": self.open_holds,
            "total_hold_ticks": self.total_hold_ticks,
        }


def compute_metrics(header: TraceHeader, events: list[TraceEvent]) -> Metrics:
    counts: dict[int, dict[str, int]] = {}

    def bump(skill: int, key: str):
        counts.setdefault(
            skill, {"started": 0, "succeeded": 0, "interrupted": 0, "timed_out": 0}
        )[key] += 1

    last_observed_tick: int | None = None
    reaction: list[int] = []
    interruption: list[int] = []
    hold_spans: list[tuple[int, int]] = []
    open_halt: int | None = None
    for e in events:
        p = e.payload()
        if e.kind == INTENTION_OBSERVED:
            last_observed_tick = e.tick
        elif e.kind == SKILL_STARTED:
            bump(p["skill"], "started")
            if p["reason"] == "intention" and last_observed_tick is not None:
                reaction.append(e.tick - last_observed_tick)
        elif e.kind == SKILL_SUCCEEDED:
            bump(p["skill"], "succeeded")
        elif e.kind == SKILL_INTERRUPTED:
            bump(p["skill"], "interrupted")
            if last_observed_tick is not None:
                interruption.append(e.tick - last_observed_tick)
        elif e.kind == SKILL_TIMED_OUT:
            bump(p["skill"], "timed_out")
        elif e.kind == SAFETY_HALT:
            if open_halt is None:
                open_halt = e.tick
        elif e.kind == SAFETY_RESUME:
            if open_halt is not None:
                hold_spans.append((open_halt, e.tick))
                open_halt = None
    return Metrics(
        ticks=header.ticks,
        skill_counts=counts,
        reaction_latencies=reaction,
        interruption_latencies=interruption,
        hold_spans=hold_spans,
        open_holds=0 if open_halt is None else 1,
    )
