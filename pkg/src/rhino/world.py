"""Deterministic fixed-tick world: follower arms, leader model, objects.

The world is symbolic where it matters (gripper contents, object
locations, lamp/stamp state) and geometric where the safety supervisor
and the observation encoder need it (joint angles, keypoints, leader
hands).  Skill execution is a commanded-pose trajectory:

  manipulation   approach -> dwell at the reach target -> retreat to the
                 rest pose; emits a success signal of 1 over the final
                 success-tail steps; the world reports Succeeded on the
                 third consecutive signal tick and freezes the executor
                 until the planner acknowledges, at which point the
                 symbolic object moves commit atomically
  motion         open-ended gesture; targets are produced in 5-frame
                 chunks from the recent leader/follower history, so a
                 moving leader hand is re-tracked within 5 frames
  (no skill)     the arms drift back to the rest pose

Disturbances: "hold" (the leader restrains the arm) and "loot" (the
leader takes the skill's object).  A withdrawing skill walks its
trajectory index backwards, so the success signal drops and the pose
retraces; a pausing skill freezes in place.  A safety Hold/Resume
freezes everything bit-identically.

Everything is seeded and draws a fixed amount of randomness per tick, so
runs are bitwise reproducible.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .features import ObservationBundle, rot6d
from .kinematics import Chain, rotation_about
from .occupancy import EMPTY, apply_transition, matches
from .planner import (
    AbortToReverse,
    FAILED,
    FINISH_SUCCEEDED,
    FinishToIdle,
    Hold,
    NOT_RUNNING,
    RUNNING,
    Resume,
    SUCCEEDED,
    SkillFeedback,
    StartSkill,
)
from .scenario import (
    ARM_LEFT,
    ARM_RIGHT,
    DISTURBANCE_WITHDRAW,
    MANIPULATION,
    Scenario,
    SkillDef,
)

DISTURB_HOLD = "hold"
DISTURB_LOOT = "loot"
DISTURB_KINDS = (DISTURB_HOLD, DISTURB_LOOT)

SUCCESS_CONFIRM_TICKS = 3
HISTORY_TICKS = 30
CHUNK = 5

LOC_SLOT = "slot"
LOC_LEADER = "leader"
LOC_ROBOT_LEFT = "robot_left"
LOC_ROBOT_RIGHT = "robot_right"


@dataclass(frozen=True)
class LeaderInput:
    """One tick of scripted or wire-driven leader behaviour."""

    intention: int
    hand: tuple[float, float, float] | None = None  # right-hand override
    disturbance: str | None = None  # "hold" | "loot" | None


def gesture_pose(sc: Scenario, intention_id: int, rng: np.random.Generator):
    """Deterministic leader pose for an intention, plus small seeded noise.

    Returns (body_rot6d (6,6), hand_joints (2,6), left_hand, right_hand,
    head_z).  Distinct intentions land in well-separated pose clusters so
    the reference classifier has something honest to recognize.
    """
    leader = sc.world.leader
    noise_body = rng.normal(0.0, 0.01, size=6)
    noise_hands = rng.normal(0.0, 0.01, size=(2, 6))
    noise_pos = rng.normal(0.0, 0.002, size=(2, 3))

    body = np.empty((6, 6))
    axes = (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    for j in range(6):
        angle = 0.7 * math.sin(1.3 * intention_id + 0.9 * j) + noise_body[j]
        body[j] = rot6d(rotation_about(axes[j % 3], angle))
    hand_joints = np.empty((2, 6))
    for h in range(2):
        for j in range(6):
            hand_joints[h, j] = 0.5 * math.sin(
                2.1 * intention_id + 0.7 * j + 1.5 * h
            ) + noise_hands[h, j]
    offset_r = 0.12 * np.array(
        [
            math.sin(1.7 * intention_id),
            math.cos(2.3 * intention_id),
            math.sin(0.8 * intention_id + 1.0),
        ]
    )
    offset_l = 0.06 * np.array(
        [math.cos(1.1 * intention_id), math.sin(1.9 * intention_id), 0.0]
    )
    right = np.array(leader.rest_right) + offset_r + noise_pos[0]
    left = np.array(leader.rest_left) + offset_l + noise_pos[1]
    head_z = leader.head_z - 0.35 * (0.5 + 0.5 * math.sin(2.9 * intention_id + 0.4))
    return body, hand_joints, left, right, head_z


class ManipExecutor:
    """Commanded-pose trajectory for one manipulation skill.

    The trajectory index k counts executed steps.  With duration D and
    success tail n_s: approach to the reach pose until 0.45*D, dwell until
    0.7*D, retreat to the rest pose by D - n_s, then hold it; the success
    signal is 1 exactly when k > D - n_s.  A skill without a duration
    (periodic work) ramps in and oscillates, never signalling success.
    """

    def __init__(self, skill: SkillDef, q_start: dict[str, np.ndarray],
                 q_reach: dict[str, np.ndarray], q_rest: dict[str, np.ndarray]):
        self.skill = skill
        self.k = 0
        self.q_start = {a: q.copy() for a, q in q_start.items()}
        self.q_reach = q_reach
        self.q_rest = q_rest
        d = skill.duration_ticks
        if d is not None:
            self.duration = d
            self.k_reach = max(1, int(0.45 * d))
            self.k_dwell = max(self.k_reach + 1, int(0.7 * d))
            self.k_settle = max(self.k_dwell + 1, d - skill.success_tail)
        else:
            self.duration = None
            self.k_reach = 60

    def step(self, disturbed: bool) -> None:
        if disturbed:
            if self.skill.disturbance_policy == DISTURBANCE_WITHDRAW:
                self.k = max(0, self.k - 1)
            return  # pause: index frozen
        if self.duration is not None:
            self.k = min(self.duration, self.k + 1)
        else:
            self.k += 1

    def _blend(self, a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
        return a + (b - a) * t

    def commanded_pose(self) -> dict[str, np.ndarray]:
        k = self.k
        out = {}
        for arm in ("left", "right"):
            qs, qr, qe = self.q_start[arm], self.q_reach[arm], self.q_rest[arm]
            if self.duration is None:
                if k <= self.k_reach:
                    q = self._blend(qs, qr, k / self.k_reach)
                else:
                    q = qr.copy()
                    q[1] += 0.15 * math.sin(2.0 * math.pi * (k - self.k_reach) / 40.0)
                out[arm] = q
                continue
            if k <= self.k_reach:
                out[arm] = self._blend(qs, qr, k / self.k_reach)
            elif k <= self.k_dwell:
                out[arm] = qr.copy()
            elif k < self.k_settle:
                t = (k - self.k_dwell) / max(1, self.k_settle - self.k_dwell)
                out[arm] = self._blend(qr, qe, t)
            else:
                out[arm] = qe.copy()
        return out

    def success_signal(self) -> float:
        if self.duration is None:
            return 0.0
        return 1.0 if self.k > self.duration - self.skill.success_tail else 0.0

    @property
    def finished(self) -> bool:
        return self.duration is not None and self.k >= self.duration


class MotionExecutor:
    """Open-ended gesture producing commanded poses in 5-frame chunks."""

    def __init__(self, skill: SkillDef, style: str, q_start: dict[str, np.ndarray],
                 rest: dict[str, np.ndarray]):
        self.skill = skill
        self.style = style
        self.q_start = {a: q.copy() for a, q in q_start.items()}
        self.rest = rest
        self.steps = 0
        self.buffer: deque[dict[str, np.ndarray]] = deque()

    def _chunk(self, world: "World") -> list[dict[str, np.ndarray]]:
        """Next CHUNK commanded poses from the recent leader/follower
        history (the newest entries matter most)."""
        base = self.steps
        frames = []
        leader_hand = world.leader_right.copy()
        for i in range(CHUNK):
            t = base + i
            pose = {}
            for arm in ("left", "right"):
                q = self.rest[arm].copy()
                if self.style == "wave":
                    q[0] = -1.3
                    q[1] = (0.35 if arm == "left" else -0.35) + 0.35 * math.sin(
                        2.0 * math.pi * t / 30.0
                    )
                elif self.style == "reach_leader" and arm == "right":
                    q = world.chains["right"].ik_position(
                        world.joints["right"], leader_hand, iters=20
                    )
                elif self.style == "raise_front":
                    q[0] = -1.1
                    q[3] = -0.6
                elif self.style == "spread":
                    q[0] = -0.4
                    q[1] = 0.9 if arm == "left" else -0.9
                elif self.style == "thumb" and arm == "right":
                    q[0] = -0.9
                    q[3] = -1.1
                # ramp in from the starting pose over the first 30 steps
                if t < 30:
                    q = self.q_start[arm] + (q - self.q_start[arm]) * ((t + 1) / 30.0)
                pose[arm] = q
            frames.append(pose)
        return frames

    def step_pose(self, world: "World", disturbed: bool) -> dict[str, np.ndarray]:
        if not disturbed:
            if not self.buffer:
                self.buffer.extend(self._chunk(world))
            pose = self.buffer.popleft()
            self.steps += 1
            self.last_pose = pose
            return pose
        # disturbed gestures just hold still
        if not hasattr(self, "last_pose"):
            self.last_pose = {a: q.copy() for a, q in self.q_start.items()}
        return self.last_pose


# visual style per shipped gesture name; anything unknown raises arms
MOTION_STYLES = {
    "Wave": "wave",
    "Shake Hands": "reach_leader",
    "Cheers": "reach_leader",
    "Take Photo": "raise_front",
    "Thumb Up": "thumb",
    "Spread out Hands": "spread",
}


class World:
    def __init__(self, scenario: Scenario, seed: int):
        self.sc = scenario
        self.rng = np.random.default_rng(seed)
        self.chains = {
            "left": Chain(scenario.robot.left),
            "right": Chain(scenario.robot.right),
        }
        self.joints = {
            "left": np.array(scenario.robot.default_pose_left, dtype=float),
            "right": np.array(scenario.robot.default_pose_right, dtype=float),
        }
        self.rest = {a: q.copy() for a, q in self.joints.items()}
        self.occupancy = scenario.initial_occupancy
        self.object_loc: dict[int, tuple] = {}
        for oid, pl in scenario.world.placements.items():
            self.object_loc[oid] = (
                (LOC_LEADER,) if pl.initial == "leader" else (LOC_SLOT, pl.home_slot)
            )
        self.lamp_on = False
        self.stamp_marks = 0
        self.executor = None
        self.pending_success: SkillDef | None = None
        self.consec_signal = 0
        self.failure_detail = ""
        self.failed_this_tick = False
        # leader state
        self.leader_intention = scenario.idle_intention.id
        self.leader_left = np.array(scenario.world.leader.rest_left)
        self.leader_right = np.array(scenario.world.leader.rest_right)
        self.leader_head_z = scenario.world.leader.head_z
        self.leader_body = np.tile(rot6d(np.eye(3)), (6, 1))
        self.leader_hand_joints = np.zeros((2, 6))
        self.disturbance: str | None = None
        self.offer_state: tuple[int, tuple] | None = None
        self.robot_history: deque = deque(maxlen=HISTORY_TICKS)
        self.leader_history: deque = deque(maxlen=HISTORY_TICKS)
        self.tick_count = 0

    # -- leader ----------------------------------------------------------

    def apply_leader(self, inp: LeaderInput) -> None:
        sc = self.sc
        self.leader_intention = inp.intention
        body, hand_joints, left, right, head_z = gesture_pose(
            sc, inp.intention, self.rng
        )
        if inp.hand is not None:
            right = np.array(inp.hand, dtype=float)
        self.leader_body = body
        self.leader_hand_joints = hand_joints
        self.leader_left = left
        self.leader_right = right
        self.leader_head_z = head_z
        self.disturbance = inp.disturbance
        self._update_offer(inp.intention)
        if inp.disturbance == DISTURB_LOOT:
            self._loot()

    def _update_offer(self, intention_id: int) -> None:
        sc = self.sc
        intention = sc.intention(intention_id)
        offered = sc.world.offers.get(intention.name)
        # revert a standing offer the moment the intention moves on
        if self.offer_state is not None:
            oid, prev = self.offer_state
            if offered != oid:
                if self.object_loc.get(oid) == (LOC_LEADER,):
                    self.object_loc[oid] = prev
                self.offer_state = None
        if offered is not None and self.offer_state is None:
            loc = self.object_loc.get(offered)
            if loc is not None and loc[0] == LOC_SLOT:
                self.offer_state = (offered, loc)
                self.object_loc[offered] = (LOC_LEADER,)

    def _loot(self) -> None:
        if self.executor is None:
            return
        oid = self.executor.skill.object
        if oid is None:
            return
        loc = self.object_loc.get(oid)
        if loc is not None and loc[0] == LOC_SLOT:
            self.object_loc[oid] = (LOC_LEADER,)
            # the leader keeps it; no automatic return

    # -- geometry ---------------------------------------------------------

    def object_position(self, oid: int) -> np.ndarray:
        loc = self.object_loc[oid]
        if loc[0] == LOC_SLOT:
            return np.array(self.sc.world.slots[loc[1]].position)
        if loc[0] == LOC_LEADER:
            return self.leader_right.copy()
        arm = "left" if loc[0] == LOC_ROBOT_LEFT else "right"
        return self.chains[arm].wrist(self.joints[arm])

    def robot_keypoints(self) -> np.ndarray:
        return np.vstack(
            [
                self.chains["left"].keypoints(self.joints["left"]),
                self.chains["right"].keypoints(self.joints["right"]),
            ]
        )

    def leader_hand_points(self) -> np.ndarray:
        from .safety import hand_points

        return hand_points(
            self.leader_left, self.leader_right, self.sc.world.leader.hand_radius
        )

    def observe(self) -> ObservationBundle:
        objs = [
            (oid, self.object_position(oid), self.sc.world.placements[oid].radius)
            for oid in sorted(self.object_loc)
        ]
        return ObservationBundle(
            body_rot6d=self.leader_body,
            hand_joints=self.leader_hand_joints,
            occupancy=self.occupancy,
            left_hand=self.leader_left.copy(),
            right_hand=self.leader_right.copy(),
            head_z=self.leader_head_z,
            objects=objs,
            hand_radius=self.sc.world.leader.hand_radius,
        )

    # -- skill lifecycle ---------------------------------------------------

    def _reach_point(self, skill: SkillDef) -> np.ndarray:
        """Where the involved gripper(s) should aim for this skill."""
        sc = self.sc
        if skill.effect == "present" or skill.release_to == LOC_LEADER:
            side = "left" if skill.arm == ARM_LEFT else "right"
            return (self.leader_left if side == "left" else self.leader_right).copy()
        if skill.effect == "stow" and skill.object is not None:
            home = sc.world.placements[skill.object].home_slot
            return np.array(sc.world.slots[home].position)
        if skill.object is not None:
            fills = self._fills_hand(skill)
            if fills:
                return self.object_position(skill.object)
            home = sc.world.placements[skill.object].home_slot
            return np.array(sc.world.slots[home].position)
        return self.chains["right"].wrist(self.rest["right"])

    @staticmethod
    def _fills_hand(skill: SkillDef) -> bool:
        return isinstance(skill.end.left, int) or isinstance(skill.end.right, int)

    def _involved_arms(self, skill: SkillDef) -> list[str]:
        if skill.arm == ARM_LEFT:
            return ["left"]
        if skill.arm == ARM_RIGHT:
            return ["right"]
        return ["left", "right"]

    def _make_manip_executor(self, skill: SkillDef) -> ManipExecutor:
        point = self._reach_point(skill)
        q_start = {a: self.joints[a].copy() for a in ("left", "right")}
        q_reach = {a: self.joints[a].copy() for a in ("left", "right")}
        q_rest = {a: self.rest[a].copy() for a in ("left", "right")}
        for arm in self._involved_arms(skill):
            offset = np.zeros(3)
            if skill.arm == "dual":
                offset[1] = 0.08 if arm == "left" else -0.08
            q_reach[arm] = self.chains[arm].ik_position(
                self.joints[arm], point + offset, iters=40
            )
        return ManipExecutor(skill, q_start, q_reach, q_rest)

    def _make_motion_executor(self, skill: SkillDef) -> MotionExecutor:
        style = MOTION_STYLES.get(skill.name, "raise_front")
        q_start = {a: self.joints[a].copy() for a in ("left", "right")}
        return MotionExecutor(skill, style, q_start, self.rest)

    def _start_preconditions(self, skill: SkillDef) -> str | None:
        """None when the world can honour a StartSkill, else a reason."""
        sc = self.sc
        if not matches(self.occupancy, skill.start):
            return "occupancy mismatch"
        if not self._acquire_ok(skill):
            return f"object for '{skill.name}' not at its {skill.acquire_from}"
        if skill.effect == "stow" and self.object_loc.get(skill.object) != (LOC_LEADER,):
            return f"object {sc.object_names()[skill.object]} not offered"
        if skill.effect == "present":
            home = sc.world.placements[skill.object].home_slot
            if self.object_loc.get(skill.object) != (LOC_SLOT, home):
                return f"object {sc.object_names()[skill.object]} not in place"
        return None

    def _acquire_ok(self, skill: SkillDef) -> bool:
        """True when every object this skill is about to grasp is still
        where the skill expects to find it."""
        sc = self.sc
        for hand, atom in (("left", skill.end.left), ("right", skill.end.right)):
            held = getattr(self.occupancy, hand)
            if isinstance(atom, int) and held != atom:
                want = (LOC_LEADER,) if skill.acquire_from == LOC_LEADER else (
                    LOC_SLOT,
                    sc.world.placements[atom].home_slot,
                )
                if self.object_loc.get(atom) != want:
                    return False
        return True

    def _commit_success(self) -> None:
        """Apply the symbolic effects of the acknowledged finished skill."""
        skill = self.pending_success
        if skill is None:
            return
        sc = self.sc
        for hand, atom, loc_name in (
            ("left", skill.end.left, LOC_ROBOT_LEFT),
            ("right", skill.end.right, LOC_ROBOT_RIGHT),
        ):
            held = getattr(self.occupancy, hand)
            if isinstance(atom, int):
                self.object_loc[atom] = (loc_name,)
                if self.offer_state is not None and self.offer_state[0] == atom:
                    self.offer_state = None
            elif atom == EMPTY and held is not None:
                if skill.release_to == LOC_LEADER:
                    self.object_loc[held] = (LOC_LEADER,)
                else:
                    home = sc.world.placements[held].home_slot
                    self.object_loc[held] = (LOC_SLOT, home)
        if skill.effect == "stow":
            home = sc.world.placements[skill.object].home_slot
            self.object_loc[skill.object] = (LOC_SLOT, home)
        elif skill.effect == "present":
            self.object_loc[skill.object] = (LOC_LEADER,)
        elif skill.effect == "toggle_lamp":
            self.lamp_on = not self.lamp_on
        elif skill.effect == "stamp_mark":
            self.stamp_marks += 1
        self.occupancy = apply_transition(self.occupancy, skill.end)
        self.pending_success = None

    def _discard_pending(self) -> None:
        self.pending_success = None

    # -- tick --------------------------------------------------------------

    def step(self, command) -> SkillFeedback:
        """Apply one planner command; returns the feedback for next tick."""
        self.failed_this_tick = False
        frozen = isinstance(command, (Hold, Resume))
        if isinstance(command, StartSkill):
            self._commit_success()
            skill = self.sc.skill(command.skill)
            reason = self._start_preconditions(skill)
            if reason is not None:
                self.executor = None
                self.consec_signal = 0
                self.failed_this_tick = True
                self.failure_detail = reason
            else:
                self.consec_signal = 0
                if skill.kind == MANIPULATION:
                    self.executor = self._make_manip_executor(skill)
                else:
                    self.executor = self._make_motion_executor(skill)
        elif isinstance(command, AbortToReverse):
            self._discard_pending()
            rev = self.sc.skill(command.reverse)
            self.consec_signal = 0
            self.executor = self._make_manip_executor(rev)
        elif isinstance(command, FinishToIdle):
            if command.reason == FINISH_SUCCEEDED:
                self._commit_success()
            else:
                self._discard_pending()
            self.executor = None
            self.consec_signal = 0

        if not frozen:
            self._advance()
        self.tick_count += 1
        self.robot_history.append(
            (self.joints["left"].copy(), self.joints["right"].copy())
        )
        self.leader_history.append(self.leader_right.copy())
        return self._feedback()

    def _advance(self) -> None:
        speed = self.sc.robot.joint_speed
        disturbed = self.disturbance in DISTURB_KINDS
        if self.executor is None:
            targets = self.rest
        elif isinstance(self.executor, MotionExecutor):
            targets = self.executor.step_pose(self, disturbed)
        else:
            if self.pending_success is None:
                self.executor.step(disturbed)
            targets = self.executor.commanded_pose()
            signal = self.executor.success_signal()
            if signal >= 1.0 and not self._acquire_ok(self.executor.skill):
                signal = 0.0  # the object was taken; the grasp cannot land
            if self.pending_success is None:
                if signal >= 1.0:
                    self.consec_signal += 1
                    if self.consec_signal >= SUCCESS_CONFIRM_TICKS:
                        self.pending_success = self.executor.skill
                else:
                    self.consec_signal = 0
        for arm in ("left", "right"):
            delta = np.clip(targets[arm] - self.joints[arm], -speed, speed)
            self.joints[arm] = self.joints[arm] + delta

    def snapshot(self) -> dict:
        """JSON-friendly view of the world for live observers."""
        exec_info = None
        if self.executor is not None:
            exec_info = {
                "skill": self.executor.skill.id,
                "name": self.executor.skill.name,
            }
            if isinstance(self.executor, ManipExecutor):
                exec_info["progress"] = self.executor.k
                exec_info["signal"] = self.executor.success_signal()
        names = self.sc.object_names()
        return {
            "tick": self.tick_count,
            "joints": {a: [round(v, 6) for v in self.joints[a]] for a in ("left", "right")},
            "keypoints": [[round(v, 4) for v in p] for p in self.robot_keypoints()],
            "hand_points": [[round(v, 4) for v in p] for p in self.leader_hand_points()],
            "leader": {
                "left": [round(v, 4) for v in self.leader_left],
                "right": [round(v, 4) for v in self.leader_right],
                "intention": self.leader_intention,
            },
            "occupancy": [
                "empty" if held is None else names[held]
                for held in (self.occupancy.left, self.occupancy.right)
            ],
            "objects": {
                names[oid]: {
                    "at": "/".join(str(p) for p in loc),
                    "position": [round(v, 4) for v in self.object_position(oid)],
                }
                for oid, loc in sorted(self.object_loc.items())
            },
            "lamp_on": self.lamp_on,
            "stamp_marks": self.stamp_marks,
            "executor": exec_info,
        }

    def _feedback(self) -> SkillFeedback:
        if self.failed_this_tick:
            return SkillFeedback(kind=FAILED, detail=self.failure_detail)
        if self.pending_success is not None:
            return SkillFeedback(kind=SUCCEEDED, success_signal=1.0)
        if self.executor is None:
            return SkillFeedback(kind=NOT_RUNNING)
        signal = (
            self.executor.success_signal()
            if isinstance(self.executor, ManipExecutor)
            else 0.0
        )
        return SkillFeedback(kind=RUNNING, success_signal=signal)
