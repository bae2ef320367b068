"""Tick loop tying the leader script, recognizer, supervisor, planner and
world together, with recording for bitwise-reproducible replays.

A leader script is a JSON list of entries::

    {"from_tick": 0, "to_tick": 90, "intention": "Pointing Can",
     "hand": [0.5, -0.1, 0.9],      # optional right-hand override
     "disturbance": "hold"}          # optional: "hold" | "loot"

Ticks not covered by any entry show the idle intention.  Later entries
override earlier ones.  ``to_tick`` is exclusive.

Every run records its per-tick inputs and normalizes them back into the
same entry form, so a live wire-driven session and a headless scripted
run that showed the same inputs produce byte-identical traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import CentroidModel, encode_features, fit_centroids, load_model
from .planner import Planner, PlannerState, SkillFeedback, TickResult
from .safety import SafetyStatus, check_safety
from .scenario import Scenario, resolve_scenario
from .trace import EventLog, TraceHeader, VerificationReport, diff_events
from .world import DISTURB_KINDS, LeaderInput, World

MODE_DIRECT = "direct"  # planner sees the scripted intention labels
MODE_RAW = "raw"  # planner sees the recognizer's output

_NO_HAND = object()


def parse_script(scenario: Scenario, entries) -> list[dict]:
    """Validate raw script entries; returns them with intention ids."""
    if not isinstance(entries, list):
        raise ValueError("script must be a JSON list of entries")
    out = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict):
            raise ValueError(f"script entry {i}: expected an object")
        try:
            a, b = int(e["from_tick"]), int(e["to_tick"])
        except KeyError as exc:
            raise ValueError(f"script entry {i}: missing {exc.args[0]}") from None
        if not 0 <= a < b:
            raise ValueError(f"script entry {i}: need 0 <= from_tick < to_tick")
        ref = e.get("intention", 0)
        if isinstance(ref, str):
            try:
                iid = scenario.intention_by_name(ref).id
            except KeyError:
                raise ValueError(
                    f"script entry {i}: unknown intention '{ref}'"
                ) from None
        else:
            iid = int(ref)
            if not any(it.id == iid for it in scenario.intentions):
                raise ValueError(f"script entry {i}: unknown intention id {iid}")
        hand = e.get("hand")
        if hand is not None:
            hand = tuple(float(v) for v in hand)
            if len(hand) != 3:
                raise ValueError(f"script entry {i}: hand must be [x, y, z]")
        dist = e.get("disturbance")
        if dist is not None and dist not in DISTURB_KINDS:
            raise ValueError(
                f"script entry {i}: disturbance must be one of {DISTURB_KINDS}"
            )
        out.append(
            {"from_tick": a, "to_tick": b, "intention": iid, "hand": hand,
             "disturbance": dist}
        )
    return out


def script_ticks(entries: list[dict]) -> int:
    return max((e["to_tick"] for e in entries), default=0)


def inputs_from_script(scenario: Scenario, entries: list[dict],
                       ticks: int) -> list[LeaderInput]:
    idle = scenario.idle_intention.id
    per_tick = [(idle, None, None)] * ticks
    for e in entries:
        row = (e["intention"], e["hand"], e["disturbance"])
        for t in range(e["from_tick"], min(e["to_tick"], ticks)):
            per_tick[t] = row
    return [LeaderInput(i, h, d) for (i, h, d) in per_tick]


def normalize_inputs(scenario: Scenario, inputs: list[LeaderInput]) -> list[dict]:
    """Compress per-tick inputs back into canonical script entries.

    Runs equal to (idle, no override, no disturbance) are omitted; they
    are the default.  This is the form stored in trace headers.
    """
    idle = scenario.idle_intention.id
    entries = []
    run_start, prev = 0, None
    rows = [(inp.intention, inp.hand, inp.disturbance) for inp in inputs]
    for t, row in enumerate(rows + [_NO_HAND]):  # sentinel flushes the last run
        if row == prev:
            continue
        if prev is not None and prev != (idle, None, None):
            entry = {
                "from_tick": run_start,
                "to_tick": t,
                "intention": scenario.intention(prev[0]).name,
            }
            if prev[1] is not None:
                entry["hand"] = list(prev[1])
            if prev[2] is not None:
                entry["disturbance"] = prev[2]
            entries.append(entry)
        run_start, prev = t, row
    return entries


@dataclass
class TickOutcome:
    tick: int
    result: TickResult
    safety: SafetyStatus
    intention_seen: int


class Session:
    """One stepped run: feed a LeaderInput per tick, collect the trace."""

    def __init__(self, scenario: Scenario, seed: int, mode: str = MODE_DIRECT,
                 model: CentroidModel | None = None,
                 collect_features: bool = False):
        if mode not in (MODE_DIRECT, MODE_RAW):
            raise ValueError(f"unknown mode '{mode}'")
        if mode == MODE_RAW and model is None:
            raise ValueError("raw mode needs a recognizer model")
        self.sc = scenario
        self.mode = mode
        self.model = model
        self.world = World(scenario, seed)
        self.planner = Planner(scenario)
        self.state: PlannerState = self.planner.reset()
        self.feedback = SkillFeedback()
        self.prev_safe = True
        self.log = EventLog()
        self.inputs: list[LeaderInput] = []
        self.features: list[tuple[int, np.ndarray]] | None = (
            [] if collect_features else None
        )
        self.tick = 0

    def step(self, inp: LeaderInput) -> TickOutcome:
        t = self.tick
        self.inputs.append(inp)
        self.world.apply_leader(inp)
        if self.mode == MODE_RAW or self.features is not None:
            bundle = self.world.observe()
            vec = encode_features(bundle, [o.id for o in self.sc.objects])
            if self.features is not None:
                self.features.append((inp.intention, vec))
        intention = (
            self.model.classify(vec) if self.mode == MODE_RAW else inp.intention
        )
        status = check_safety(
            self.world.robot_keypoints(),
            self.world.leader_hand_points(),
            self.sc.params.safety_threshold,
            self.sc.params.safety_hysteresis,
            self.prev_safe,
        )
        result = self.planner.tick(self.state, intention, self.feedback,
                                   status, t)
        self.state = result.state
        for ev in result.events:
            self.log.append(ev)
        self.feedback = self.world.step(result.command)
        self.prev_safe = status.safe
        self.tick += 1
        return TickOutcome(tick=t, result=result, safety=status,
                           intention_seen=intention)

    def header(self, scenario_ref: str, seed: int,
               model_ref: str | None = None) -> TraceHeader:
        return TraceHeader(
            scenario=scenario_ref,
            seed=seed,
            ticks=self.tick,
            mode=self.mode,
            script=tuple(normalize_inputs(self.sc, self.inputs)),
            model=model_ref,
        )


@dataclass
class RunResult:
    header: TraceHeader
    events: list
    world: World
    features: list[tuple[int, np.ndarray]] | None = None
    outcomes: list[TickOutcome] = field(default_factory=list)


def run_script(scenario: Scenario, entries, *, seed: int, ticks: int | None = None,
               mode: str = MODE_DIRECT, model: CentroidModel | None = None,
               scenario_ref: str = "inline", model_ref: str | None = None,
               collect_features: bool = False,
               keep_outcomes: bool = False) -> RunResult:
    parsed = parse_script(scenario, entries)
    if ticks is None:
        ticks = script_ticks(parsed)
        if ticks == 0:
            raise ValueError("an empty script needs an explicit tick count")
    session = Session(scenario, seed, mode=mode, model=model,
                      collect_features=collect_features)
    outcomes = []
    for inp in inputs_from_script(scenario, parsed, ticks):
        out = session.step(inp)
        if keep_outcomes:
            outcomes.append(out)
    return RunResult(
        header=session.header(scenario_ref, seed, model_ref),
        events=session.log.events,
        world=session.world,
        features=session.features,
        outcomes=outcomes,
    )


def training_script(scenario: Scenario, show_ticks: int = 60,
                    gap_ticks: int = 30) -> list[dict]:
    """A script cycling through every intention, for harvesting labelled
    feature samples (idle gaps let the follower settle in between)."""
    entries = []
    t = 0
    for intention in scenario.intentions:
        if intention.id != scenario.idle_intention.id:
            entries.append(
                {"from_tick": t, "to_tick": t + show_ticks,
                 "intention": intention.name}
            )
        t += show_ticks + gap_ticks
    return entries


def collect_gesture_samples(scenario: Scenario, seed: int,
                            per_intention: int = 60):
    """Labelled feature vectors for every intention, from a follower that
    never acts.

    Keeping the world static means every non-gesture feature (gripper
    occupancy, object layout) is identical across classes; at run time a
    changed layout then shifts all class distances equally instead of
    favouring whichever class happened to see more variety in training.
    Returns (samples (n, dim), labels (n,)).
    """
    object_order = [o.id for o in scenario.objects]
    samples, labels = [], []
    for intention in scenario.intentions:
        world = World(scenario, seed + intention.id)
        for _ in range(per_intention):
            world.apply_leader(LeaderInput(intention=intention.id))
            samples.append(encode_features(world.observe(), object_order))
            labels.append(intention.id)
    return np.array(samples), np.array(labels)


FIT_SCHEME = "fit:"


def model_from_ref(ref: str) -> CentroidModel:
    """Recognizer model from a file path, or fitted on the spot for refs of
    the form "fit:<seed>:<scenario>" (a deterministic static harvest, so a
    trace can cite the model without shipping a file)."""
    if ref.startswith(FIT_SCHEME):
        _, seed, scenario_ref = ref.split(":", 2)
        samples, labels = collect_gesture_samples(
            resolve_scenario(scenario_ref), int(seed)
        )
        return fit_centroids(samples, labels)
    return load_model(ref)


def fit_ref(scenario_ref: str, seed: int) -> str:
    return f"{FIT_SCHEME}{seed}:{scenario_ref}"


def rerun_header(header: TraceHeader):
    """Re-execute the run a trace header describes; returns its events."""
    scenario = resolve_scenario(header.scenario)
    model = None
    if header.mode == MODE_RAW:
        if not header.model:
            raise ValueError("raw-mode trace lacks a recognizer reference")
        model = model_from_ref(header.model)
    entries = [dict(e) if not isinstance(e, dict) else e for e in header.script]
    result = run_script(
        scenario,
        entries,
        seed=header.seed,
        ticks=header.ticks,
        mode=header.mode,
        model=model,
        scenario_ref=header.scenario,
        model_ref=header.model,
    )
    return result


def verify_trace(header: TraceHeader, events) -> VerificationReport:
    """Re-run a recorded trace and compare event streams bitwise."""
    result = rerun_header(header)
    return diff_events(events, result.events, header.ticks)
