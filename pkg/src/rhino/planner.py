"""Reactive skill planner: a pure fixed-tick state machine.

Each tick consumes the recognized leader intention, the skill feedback
from the previous world step and the safety verdict, and produces exactly
one command plus trace events.  Rule priority within a tick:

  (a) debounce bookkeeping (always runs, even while held)
  (b) safety: unsafe => Hold; first safe tick after a hold => Resume
  (c) stable-intention rule: an intention stable for n_r ticks (k_2 while
      a skill runs) that differs from the active intention triggers a
      start, a chained path, a reversal, or a cancel
  (d) success: apply the end transition, advance the queue or finish
  (e) timeout, then plain continue

A stable-intention outcome that changes nothing (the "ride it out" cases)
falls through to (d)/(e) instead of consuming the tick, so success and
timeout processing can never be starved by a persistent intention.

The planner owns symbolic state only; it never touches geometry.  All
methods are pure: tick() returns a new state, mutating nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import trace
from .graph import OccupancyGraph
from .occupancy import HandOccupancy, apply_transition, matches
from .safety import SafetyStatus
from .scenario import (
    INTENTION_CANCEL,
    INTENTION_IDLE,
    MANIPULATION,
    MOTION,
    Scenario,
    SkillDef,
)

# feedback kinds
NOT_RUNNING = "not_running"
RUNNING = "running"
SUCCEEDED = "succeeded"
FAILED = "failed"

# finish reasons
FINISH_SUCCEEDED = "succeeded"
FINISH_TIMED_OUT = "timed_out"
FINISH_FAILED = "failed"
FINISH_CANCELED = "canceled"

# start reasons
REASON_INTENTION = "intention"  # direct trigger, start condition already met
REASON_PATH = "path"  # a chain link on the way to the target
REASON_TARGET = "target"  # the chained target, started by queue advance
REASON_REVERSE = "reverse"  # rollback of an interrupted skill


@dataclass(frozen=True)
class SkillFeedback:
    kind: str = NOT_RUNNING
    success_signal: float = 0.0
    detail: str = ""


@dataclass(frozen=True)
class NoOp:
    pass


@dataclass(frozen=True)
class StartSkill:
    skill: int


@dataclass(frozen=True)
class ContinueSkill:
    skill: int


@dataclass(frozen=True)
class AbortToReverse:
    skill: int
    reverse: int


@dataclass(frozen=True)
class FinishToIdle:
    reason: str


@dataclass(frozen=True)
class Hold:
    pass


@dataclass(frozen=True)
class Resume:
    pass


Command = object  # one of the seven dataclasses above


@dataclass(frozen=True)
class PlannerState:
    occupancy: HandOccupancy
    current: int | None = None  # running skill id
    pending: tuple[int, ...] = ()  # queued skill ids after current
    current_is_reverse: bool = False
    candidate: int = 0  # last observed intention
    streak: int = 0  # consecutive ticks candidate has been observed
    active_intention: int = 0  # the intention already acted upon
    skill_elapsed: int = 0  # ticks the current skill has been commanded
    held: bool = False  # safety hold in effect

    @property
    def phase(self) -> str:
        return "idle" if self.current is None else "executing"


@dataclass(frozen=True)
class TickResult:
    state: PlannerState
    command: Command
    events: tuple[trace.TraceEvent, ...]


class Planner:
    def __init__(self, scenario: Scenario, graph: OccupancyGraph | None = None):
        self.scenario = scenario
        self.graph = graph if graph is not None else OccupancyGraph(scenario)

    def reset(self) -> PlannerState:
        sc = self.scenario
        idle = sc.idle_intention.id
        return PlannerState(
            occupancy=sc.initial_occupancy,
            candidate=idle,
            active_intention=idle,
        )

    def tick(
        self,
        state: PlannerState,
        intention: int,
        feedback: SkillFeedback,
        safety: SafetyStatus,
        tick_no: int,
    ) -> TickResult:
        sc = self.scenario
        p = sc.params
        events: list[trace.TraceEvent] = []

        # (a) debounce; the streak keeps counting even while held
        cap = max(p.n_r, p.k_2)
        if intention == state.candidate:
            candidate = state.candidate
            prev_streak = state.streak
            streak = min(state.streak + 1, cap)
        else:
            candidate = intention
            prev_streak = 0
            streak = 1
            events.append(trace.intention_observed(tick_no, intention))
        if prev_streak < p.n_r <= streak:
            events.append(trace.intention_stable(tick_no, candidate, streak))
        st = replace(state, candidate=candidate, streak=streak)

        # (b) safety pre-empts everything; a hold freezes skill time
        if not safety.safe:
            if not st.held:
                events.append(
                    trace.safety_halt(tick_no, safety.robot_point, safety.hand_point)
                )
            return TickResult(replace(st, held=True), Hold(), tuple(events))
        if st.held:
            events.append(trace.safety_resume(tick_no))
            return TickResult(replace(st, held=False), Resume(), tuple(events))

        cur = sc.skill(st.current) if st.current is not None else None

        # (c) stable-intention rule
        threshold = p.n_r if cur is None else p.k_2
        if streak >= threshold and candidate != st.active_intention:
            result = self._stable_intention(st, candidate, cur, events, tick_no)
            if result is not None:
                return result
            # otherwise: nothing to change now; fall through with the
            # intention still armed

        # (d) success from the previous world step
        if feedback.kind == SUCCEEDED and cur is not None:
            return self._succeed(st, cur, events, tick_no)
        if feedback.kind == FAILED and cur is not None:
            events.append(trace.diagnostic(tick_no, "skill_failed", feedback.detail))
            return TickResult(
                self._to_idle(st), FinishToIdle(FINISH_FAILED), tuple(events)
            )

        # (e) timeout, then continue
        if cur is not None:
            if cur.timeout_ticks is not None and st.skill_elapsed >= cur.timeout_ticks:
                events.append(trace.skill_timed_out(tick_no, cur.id))
                return TickResult(
                    self._to_idle(st), FinishToIdle(FINISH_TIMED_OUT), tuple(events)
                )
            return TickResult(
                replace(st, skill_elapsed=st.skill_elapsed + 1),
                ContinueSkill(cur.id),
                tuple(events),
            )
        return TickResult(st, NoOp(), tuple(events))

    # -- rule bodies ----------------------------------------------------

    def _to_idle(self, st: PlannerState, occupancy: HandOccupancy | None = None) -> PlannerState:
        return replace(
            st,
            occupancy=occupancy if occupancy is not None else st.occupancy,
            current=None,
            pending=(),
            current_is_reverse=False,
            skill_elapsed=0,
        )

    def _stable_intention(
        self,
        st: PlannerState,
        candidate: int,
        cur: SkillDef | None,
        events: list[trace.TraceEvent],
        tick_no: int,
    ) -> TickResult | None:
        """Returns None when nothing can change this tick (intention stays
        armed and the caller falls through to success/timeout handling)."""
        sc = self.scenario
        idef = sc.intention(candidate)

        if idef.kind == INTENTION_IDLE:
            if cur is None:
                return TickResult(
                    replace(st, active_intention=candidate), NoOp(), tuple(events)
                )
            if cur.kind == MANIPULATION:
                return None  # a manipulation in progress is never abandoned to idling
            # a gesture ends naturally once the leader disengages
            events.append(trace.skill_succeeded(tick_no, cur.id))
            return TickResult(
                self._to_idle(replace(st, active_intention=candidate)),
                FinishToIdle(FINISH_SUCCEEDED),
                tuple(events),
            )

        if idef.kind == INTENTION_CANCEL:
            if cur is None:
                return TickResult(
                    replace(st, active_intention=candidate), NoOp(), tuple(events)
                )
            if cur.kind == MOTION:
                events.append(trace.skill_interrupted(tick_no, cur.id, None))
                return TickResult(
                    self._to_idle(replace(st, active_intention=candidate)),
                    FinishToIdle(FINISH_CANCELED),
                    tuple(events),
                )
            if cur.interruptible and cur.reverse is not None:
                return self._reverse_into(st, candidate, cur, (), events, tick_no)
            return None  # non-interruptible: ride it out, stay armed

        # skill intention
        target = sc.skill(idef.skill)
        if cur is not None and cur.id == target.id:
            # re-affirming what is already running: acknowledge, no restart
            return TickResult(
                replace(
                    st,
                    active_intention=candidate,
                    skill_elapsed=st.skill_elapsed + 1,
                ),
                ContinueSkill(cur.id),
                tuple(events),
            )

        if cur is not None and cur.kind == MANIPULATION:
            if not (cur.interruptible and cur.reverse is not None):
                return None  # cannot interrupt; stay armed until it ends
            rev = sc.skill(cur.reverse)
            occ_after = apply_transition(st.occupancy, rev.end)
            middle = self._plan(occ_after, target)
            if middle is None:
                events.append(trace.diagnostic(tick_no, "no_path", target.name))
                return TickResult(
                    replace(
                        st,
                        active_intention=candidate,
                        skill_elapsed=st.skill_elapsed + 1,
                    ),
                    ContinueSkill(cur.id),
                    tuple(events),
                )
            return self._reverse_into(
                st, candidate, cur, tuple(middle) + (target.id,), events, tick_no,
                middle=middle, target=target,
            )

        # idle, or a motion skill that simply gets replaced
        middle = self._plan(st.occupancy, target)
        if middle is None:
            events.append(trace.diagnostic(tick_no, "no_path", target.name))
            if cur is not None:
                return TickResult(
                    replace(
                        st,
                        active_intention=candidate,
                        skill_elapsed=st.skill_elapsed + 1,
                    ),
                    ContinueSkill(cur.id),
                    tuple(events),
                )
            return TickResult(
                replace(st, active_intention=candidate), NoOp(), tuple(events)
            )
        if cur is not None:
            events.append(trace.skill_interrupted(tick_no, cur.id, None))
        queue = tuple(middle) + (target.id,)
        first = queue[0]
        if middle:
            events.append(trace.path_planned(tick_no, list(middle), target.id))
            reason = REASON_PATH
        else:
            reason = REASON_INTENTION
        events.append(trace.skill_started(tick_no, first, reason))
        return TickResult(
            replace(
                st,
                active_intention=candidate,
                current=first,
                pending=queue[1:],
                current_is_reverse=False,
                skill_elapsed=1,
            ),
            StartSkill(first),
            tuple(events),
        )

    def _plan(self, occ: HandOccupancy, target: SkillDef) -> list[int] | None:
        """Manipulation chain bringing occ to target's start condition;
        [] when it already matches, None when unreachable."""
        if matches(occ, target.start):
            return []
        path = self.graph.find_path(occ, target.start)
        if path is None:
            return None
        return list(path.skills)

    def _reverse_into(
        self,
        st: PlannerState,
        candidate: int,
        cur: SkillDef,
        pending: tuple[int, ...],
        events: list[trace.TraceEvent],
        tick_no: int,
        middle: list[int] | None = None,
        target: SkillDef | None = None,
    ) -> TickResult:
        rev = self.scenario.skill(cur.reverse)
        events.append(trace.skill_interrupted(tick_no, cur.id, rev.id))
        if middle:
            events.append(trace.path_planned(tick_no, list(middle), target.id))
        events.append(trace.skill_started(tick_no, rev.id, REASON_REVERSE))
        return TickResult(
            replace(
                st,
                active_intention=candidate,
                current=rev.id,
                pending=pending,
                current_is_reverse=True,
                skill_elapsed=1,
            ),
            AbortToReverse(cur.id, rev.id),
            tuple(events),
        )

    def _succeed(
        self,
        st: PlannerState,
        cur: SkillDef,
        events: list[trace.TraceEvent],
        tick_no: int,
    ) -> TickResult:
        sc = self.scenario
        occ2 = apply_transition(st.occupancy, cur.end)
        events.append(trace.skill_succeeded(tick_no, cur.id))
        if occ2 != st.occupancy:
            events.append(trace.occupancy_changed(tick_no, occ2.left, occ2.right))
        if st.pending:
            nxt = sc.skill(st.pending[0])
            if not matches(occ2, nxt.start):
                events.append(
                    trace.diagnostic(tick_no, "queued_start_unsatisfied", nxt.name)
                )
                return TickResult(
                    self._to_idle(st, occ2),
                    FinishToIdle(FINISH_SUCCEEDED),
                    tuple(events),
                )
            reason = REASON_TARGET if len(st.pending) == 1 else REASON_PATH
            events.append(trace.skill_started(tick_no, nxt.id, reason))
            return TickResult(
                replace(
                    st,
                    occupancy=occ2,
                    current=nxt.id,
                    pending=st.pending[1:],
                    current_is_reverse=False,
                    skill_elapsed=1,
                ),
                StartSkill(nxt.id),
                tuple(events),
            )
        return TickResult(
            self._to_idle(st, occ2), FinishToIdle(FINISH_SUCCEEDED), tuple(events)
        )
