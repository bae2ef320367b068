"""Scenario definitions: objects, skills, intentions, robot and world layout.

A scenario file is a single JSON document.  Object, skill and intention
references inside it are written by name for readability; the loader
resolves them to integer ids and validates the whole document, collecting
every problem before raising.

Skills come in three kinds:

  manipulation  changes (or may change) hand occupancy; has a duration,
                a success tail, optionally a reverse skill for rollback
  motion        expressive gesture; identity occupancy transition; runs
                until the leader's intention moves on
  idle          the single resting skill (id 0 by convention in shipped
                files, but any id is accepted)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .kinematics import ChainSpec, chain_to_jsonable, parse_chain
from .occupancy import (
    EMPTY,
    HandOccupancy,
    OccupancyPattern,
    TransitionPattern,
    format_atom,
    parse_pattern_atom,
    parse_transition_atom,
)

MAX_OBJECTS = 5

MANIPULATION = "manipulation"
MOTION = "motion"
IDLE = "idle"
SKILL_KINDS = (MANIPULATION, MOTION, IDLE)

ARM_LEFT = "left"
ARM_RIGHT = "right"
ARM_DUAL = "dual"
ARMS = (ARM_LEFT, ARM_RIGHT, ARM_DUAL)

INTENTION_IDLE = "idle"
INTENTION_CANCEL = "cancel"
INTENTION_SKILL = "skill"
INTENTION_KINDS = (INTENTION_IDLE, INTENTION_CANCEL, INTENTION_SKILL)

DISTURBANCE_WITHDRAW = "withdraw"
DISTURBANCE_PAUSE = "pause"

DEFAULT_SUCCESS_TAIL = 25


class ScenarioError(ValueError):
    """Raised with every validation problem found, not just the first."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class ObjectKind:
    id: int
    name: str


@dataclass(frozen=True)
class SkillDef:
    id: int
    name: str
    kind: str  # manipulation | motion | idle
    start: OccupancyPattern
    end: TransitionPattern
    arm: str  # left | right | dual
    reverse: int | None = None
    interruptible: bool = False
    timeout_ticks: int | None = None
    duration_ticks: int | None = None
    success_tail: int = DEFAULT_SUCCESS_TAIL
    disturbance_policy: str = DISTURBANCE_WITHDRAW
    object: int | None = None  # primary object the executor reaches for
    acquire_from: str = "slot"  # slot | leader: where a grasped object comes from
    release_to: str = "slot"  # slot | leader: where a released object goes
    effect: str | None = None  # world side effect applied on success


@dataclass(frozen=True)
class IntentionDef:
    id: int
    name: str
    kind: str = INTENTION_SKILL  # idle | cancel | skill
    skill: int | None = None


@dataclass(frozen=True)
class PlannerParams:
    n_r: int = 15  # debounce ticks to react from idle
    k_2: int = 15  # debounce ticks to interrupt a running skill
    tick_rate: int = 30
    safety_threshold: float = 0.1  # metres
    safety_hysteresis: float = 0.02  # extra clearance required to resume


@dataclass(frozen=True)
class SlotSpec:
    name: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class ObjectPlacement:
    object: int
    home_slot: str
    radius: float
    initial: str = "slot"  # slot | leader


@dataclass(frozen=True)
class LeaderSpec:
    rest_left: tuple[float, float, float]
    rest_right: tuple[float, float, float]
    head_z: float
    hand_radius: float = 0.05


@dataclass(frozen=True)
class WorldSpec:
    slots: dict[str, SlotSpec]
    placements: dict[int, ObjectPlacement]
    leader: LeaderSpec
    # intention name -> object id temporarily presented by the leader
    offers: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class RobotSpec:
    left: ChainSpec
    right: ChainSpec
    default_pose_left: tuple[float, ...]
    default_pose_right: tuple[float, ...]
    joint_speed: float = 0.05  # max |dq| per joint per tick, radians


@dataclass(frozen=True)
class Scenario:
    name: str
    objects: tuple[ObjectKind, ...]
    skills: tuple[SkillDef, ...]
    intentions: tuple[IntentionDef, ...]
    params: PlannerParams
    initial_occupancy: HandOccupancy
    robot: RobotSpec
    world: WorldSpec

    def skill(self, skill_id: int) -> SkillDef:
        return self._skills_by_id[skill_id]

    def intention(self, intention_id: int) -> IntentionDef:
        return self._intentions_by_id[intention_id]

    def object_names(self) -> dict[int, str]:
        return {o.id: o.name for o in self.objects}

    @property
    def idle_skill(self) -> SkillDef:
        return next(s for s in self.skills if s.kind == IDLE)

    @property
    def idle_intention(self) -> IntentionDef:
        return next(i for i in self.intentions if i.kind == INTENTION_IDLE)

    @property
    def _skills_by_id(self) -> dict[int, SkillDef]:
        return {s.id: s for s in self.skills}

    @property
    def _intentions_by_id(self) -> dict[int, IntentionDef]:
        return {i.id: i for i in self.intentions}

    def skill_by_name(self, name: str) -> SkillDef:
        for s in self.skills:
            if s.name == name:
                return s
        raise KeyError(name)

    def intention_by_name(self, name: str) -> IntentionDef:
        for i in self.intentions:
            if i.name == name:
                return i
        raise KeyError(name)


def _require(data: dict, key: str, problems: list[str], ctx: str):
    if key not in data:
        problems.append(f"{ctx}: missing field {key!r}")
        return None
    return data[key]


def load_scenario(source: str | Path | dict) -> Scenario:
    """Parse and validate a scenario from a path, JSON text, or dict.

    Raises ScenarioError listing every problem found.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError([f"invalid JSON: {e}"]) from e
    if not isinstance(data, dict):
        raise ScenarioError(["top level must be a JSON object"])

    problems: list[str] = []
    name = data.get("name")
    if not isinstance(name, str) or not name:
        problems.append("scenario name must be a non-empty string")
        name = "?"

    # --- objects ---
    objects: list[ObjectKind] = []
    raw_objects = data.get("objects", [])
    if not isinstance(raw_objects, list):
        problems.append("objects must be a list")
        raw_objects = []
    if len(raw_objects) > MAX_OBJECTS:
        problems.append(f"at most {MAX_OBJECTS} objects allowed, got {len(raw_objects)}")
    for i, o in enumerate(raw_objects):
        oid = o.get("id")
        oname = o.get("name")
        if not isinstance(oid, int) or oid < 1:
            problems.append(f"object[{i}]: id must be a positive integer")
            continue
        if not isinstance(oname, str) or not oname:
            problems.append(f"object[{i}]: name must be a non-empty string")
            continue
        objects.append(ObjectKind(id=oid, name=oname))
    obj_ids = {o.name: o.id for o in objects}
    if len(set(o.id for o in objects)) != len(objects):
        problems.append("object ids must be unique")
    if len(set(o.name for o in objects)) != len(objects):
        problems.append("object names must be unique")

    # --- skills ---
    skills: list[SkillDef] = []
    raw_skills = data.get("skills", [])
    if not isinstance(raw_skills, list) or not raw_skills:
        problems.append("skills must be a non-empty list")
        raw_skills = []
    name_to_skill_id: dict[str, int] = {}
    for i, s in enumerate(raw_skills):
        sid = s.get("id")
        sname = s.get("name")
        if isinstance(sid, int) and isinstance(sname, str):
            name_to_skill_id[sname] = sid
    for i, s in enumerate(raw_skills):
        ctx = f"skill[{i}]"
        sid = _require(s, "id", problems, ctx)
        sname = _require(s, "name", problems, ctx)
        kind = _require(s, "kind", problems, ctx)
        if sid is None or sname is None or kind is None:
            continue
        if kind not in SKILL_KINDS:
            problems.append(f"{ctx} ({sname}): unknown kind {kind!r}")
            continue
        arm = s.get("arm", ARM_DUAL)
        if arm not in ARMS:
            problems.append(f"{ctx} ({sname}): unknown arm {arm!r}")
            arm = ARM_DUAL
        try:
            start = OccupancyPattern(
                left=parse_pattern_atom(s["start"][0], obj_ids),
                right=parse_pattern_atom(s["start"][1], obj_ids),
            )
            end = TransitionPattern(
                left=parse_transition_atom(s["end"][0], obj_ids),
                right=parse_transition_atom(s["end"][1], obj_ids),
            )
        except (KeyError, IndexError, TypeError, ValueError) as e:
            problems.append(f"{ctx} ({sname}): bad start/end patterns: {e}")
            continue
        reverse = s.get("reverse")
        if reverse is not None:
            if reverse not in name_to_skill_id:
                problems.append(f"{ctx} ({sname}): reverse skill {reverse!r} not defined")
                reverse = None
            else:
                reverse = name_to_skill_id[reverse]
        obj = s.get("object")
        if obj is not None:
            if obj not in obj_ids:
                problems.append(f"{ctx} ({sname}): object {obj!r} not defined")
                obj = None
            else:
                obj = obj_ids[obj]
        duration = s.get("duration_ticks")
        timeout = s.get("timeout_ticks")
        if kind == MANIPULATION and duration is None and timeout is None:
            problems.append(f"{ctx} ({sname}): manipulation needs duration_ticks or timeout_ticks")
        tail = s.get("success_tail_ticks", DEFAULT_SUCCESS_TAIL)
        if duration is not None and tail >= duration:
            problems.append(f"{ctx} ({sname}): success_tail_ticks must be < duration_ticks")
        policy = s.get("disturbance_policy", DISTURBANCE_WITHDRAW)
        if policy not in (DISTURBANCE_WITHDRAW, DISTURBANCE_PAUSE):
            problems.append(f"{ctx} ({sname}): unknown disturbance_policy {policy!r}")
            policy = DISTURBANCE_WITHDRAW
        interruptible = bool(s.get("interruptible", kind == MOTION))
        skills.append(
            SkillDef(
                id=sid,
                name=sname,
                kind=kind,
                start=start,
                end=end,
                arm=arm,
                reverse=reverse,
                interruptible=interruptible,
                timeout_ticks=timeout,
                duration_ticks=duration,
                success_tail=tail,
                disturbance_policy=policy,
                object=obj,
                acquire_from=s.get("acquire_from", "slot"),
                release_to=s.get("release_to", "slot"),
                effect=s.get("effect"),
            )
        )
    by_id = {s.id: s for s in skills}
    if len(by_id) != len(skills):
        problems.append("skill ids must be unique")
    if len(set(s.name for s in skills)) != len(skills):
        problems.append("skill names must be unique")
    idle_count = sum(1 for s in skills if s.kind == IDLE)
    if skills and idle_count != 1:
        problems.append(f"exactly one idle skill required, found {idle_count}")
    for s in skills:
        if s.reverse is not None:
            rev = by_id.get(s.reverse)
            if s.kind == MOTION:
                problems.append(f"skill {s.name}: motion skills cannot have a reverse")
            elif rev is None or rev.kind != MANIPULATION:
                problems.append(f"skill {s.name}: reverse must be a manipulation skill")
        if s.kind == MANIPULATION and s.interruptible and s.reverse is None:
            problems.append(f"skill {s.name}: interruptible manipulation requires a reverse")
        if s.kind == IDLE and s.interruptible:
            pass  # harmless

    # --- intentions ---
    intentions: list[IntentionDef] = []
    raw_intentions = data.get("intentions", [])
    if not isinstance(raw_intentions, list) or not raw_intentions:
        problems.append("intentions must be a non-empty list")
        raw_intentions = []
    for i, it in enumerate(raw_intentions):
        ctx = f"intention[{i}]"
        iid = _require(it, "id", problems, ctx)
        iname = _require(it, "name", problems, ctx)
        if iid is None or iname is None:
            continue
        kind = it.get("kind", INTENTION_SKILL)
        if kind not in INTENTION_KINDS:
            problems.append(f"{ctx} ({iname}): unknown kind {kind!r}")
            continue
        skill = it.get("skill")
        if kind == INTENTION_SKILL:
            if skill not in name_to_skill_id:
                problems.append(f"{ctx} ({iname}): skill {skill!r} not defined")
                continue
            skill = name_to_skill_id[skill]
            target = by_id.get(skill)
            if target is not None and target.kind == IDLE:
                problems.append(f"{ctx} ({iname}): skill intentions cannot target the idle skill")
        else:
            skill = None
        intentions.append(IntentionDef(id=iid, name=iname, kind=kind, skill=skill))
    if len(set(i.id for i in intentions)) != len(intentions):
        problems.append("intention ids must be unique")
    if len(set(i.name for i in intentions)) != len(intentions):
        problems.append("intention names must be unique")
    n_idle = sum(1 for i in intentions if i.kind == INTENTION_IDLE)
    if intentions and n_idle != 1:
        problems.append(f"exactly one idle intention required, found {n_idle}")

    # --- params ---
    p = data.get("params", {})
    params = PlannerParams(
        n_r=int(p.get("n_r", 15)),
        k_2=int(p.get("k_2", 15)),
        tick_rate=int(p.get("tick_rate", 30)),
        safety_threshold=float(p.get("safety_threshold", 0.1)),
        safety_hysteresis=float(p.get("safety_hysteresis", 0.02)),
    )
    if params.n_r < 1 or params.k_2 < 1:
        problems.append("params: n_r and k_2 must be >= 1")
    if params.tick_rate < 1:
        problems.append("params: tick_rate must be >= 1")
    if params.safety_threshold <= 0 or params.safety_hysteresis < 0:
        problems.append("params: safety_threshold must be > 0 and hysteresis >= 0")

    # --- initial occupancy ---
    occ_raw = data.get("initial_occupancy", {"left": EMPTY, "right": EMPTY})
    initial = HandOccupancy(None, None)
    try:
        def occ_atom(v):
            if v == EMPTY:
                return None
            return obj_ids[v]

        initial = HandOccupancy(left=occ_atom(occ_raw["left"]), right=occ_atom(occ_raw["right"]))
    except (KeyError, TypeError) as e:
        problems.append(f"initial_occupancy: {e}")

    # --- robot ---
    robot = None
    try:
        r = data["robot"]
        robot = RobotSpec(
            left=parse_chain(r["arms"]["left"]),
            right=parse_chain(r["arms"]["right"]),
            default_pose_left=tuple(float(v) for v in r["default_pose"]["left"]),
            default_pose_right=tuple(float(v) for v in r["default_pose"]["right"]),
            joint_speed=float(r.get("joint_speed", 0.05)),
        )
        for arm_name, chain in (("left", robot.left), ("right", robot.right)):
            for sem in ("shoulder_pitch", "shoulder_yaw", "elbow", "wrist"):
                if sem not in chain.frames:
                    problems.append(f"robot.arms.{arm_name}: missing frame {sem!r}")
                else:
                    try:
                        chain.joint_index(chain.frames[sem])
                    except KeyError:
                        problems.append(
                            f"robot.arms.{arm_name}: frame {sem!r} names unknown joint"
                        )
        if len(robot.default_pose_left) != len(robot.left.joints):
            problems.append("robot.default_pose.left length must match joint count")
        if len(robot.default_pose_right) != len(robot.right.joints):
            problems.append("robot.default_pose.right length must match joint count")
    except (KeyError, TypeError, ValueError) as e:
        problems.append(f"robot: {e}")

    # --- world ---
    world = None
    try:
        w = data["world"]
        slots = {
            sname: SlotSpec(name=sname, position=tuple(float(v) for v in pos))
            for sname, pos in w["slots"].items()
        }
        placements: dict[int, ObjectPlacement] = {}
        for oname, pl in w.get("objects", {}).items():
            if oname not in obj_ids:
                problems.append(f"world.objects: unknown object {oname!r}")
                continue
            home = pl["home_slot"]
            if home not in slots:
                problems.append(f"world.objects.{oname}: unknown slot {home!r}")
                continue
            initial_loc = pl.get("initial", "slot")
            if initial_loc not in ("slot", "leader"):
                problems.append(f"world.objects.{oname}: initial must be slot or leader")
                initial_loc = "slot"
            placements[obj_ids[oname]] = ObjectPlacement(
                object=obj_ids[oname],
                home_slot=home,
                radius=float(pl.get("radius", 0.05)),
                initial=initial_loc,
            )
        for o in objects:
            if o.id not in placements:
                problems.append(f"world.objects: no placement for object {o.name!r}")
        leader_raw = w["leader"]
        leader = LeaderSpec(
            rest_left=tuple(float(v) for v in leader_raw["rest_left"]),
            rest_right=tuple(float(v) for v in leader_raw["rest_right"]),
            head_z=float(leader_raw["head_z"]),
            hand_radius=float(leader_raw.get("hand_radius", 0.05)),
        )
        offers: dict[str, int] = {}
        for iname, oname in w.get("offers", {}).items():
            if oname not in obj_ids:
                problems.append(f"world.offers: unknown object {oname!r}")
                continue
            offers[iname] = obj_ids[oname]
        world = WorldSpec(slots=slots, placements=placements, leader=leader, offers=offers)
    except (KeyError, TypeError, ValueError) as e:
        problems.append(f"world: {e}")

    if problems:
        raise ScenarioError(problems)
    assert robot is not None and world is not None
    return Scenario(
        name=name,
        objects=tuple(objects),
        skills=tuple(skills),
        intentions=tuple(intentions),
        params=params,
        initial_occupancy=initial,
        robot=robot,
        world=world,
    )


def scenario_to_jsonable(sc: Scenario) -> dict:
    """Inverse of load_scenario: a dict that loads back to an equal Scenario."""
    names = sc.object_names()
    skills_by_id = {s.id: s for s in sc.skills}

    def occ_atom(v: int | None) -> str:
        return EMPTY if v is None else names[v]

    return {
        "name": sc.name,
        "objects": [{"id": o.id, "name": o.name} for o in sc.objects],
        "initial_occupancy": {
            "left": occ_atom(sc.initial_occupancy.left),
            "right": occ_atom(sc.initial_occupancy.right),
        },
        "params": {
            "n_r": sc.params.n_r,
            "k_2": sc.params.k_2,
            "tick_rate": sc.params.tick_rate,
            "safety_threshold": sc.params.safety_threshold,
            "safety_hysteresis": sc.params.safety_hysteresis,
        },
        "skills": [
            {
                "id": s.id,
                "name": s.name,
                "kind": s.kind,
                "arm": s.arm,
                "start": [format_atom(s.start.left, names), format_atom(s.start.right, names)],
                "end": [format_atom(s.end.left, names), format_atom(s.end.right, names)],
                **({"reverse": skills_by_id[s.reverse].name} if s.reverse is not None else {}),
                "interruptible": s.interruptible,
                **({"timeout_ticks": s.timeout_ticks} if s.timeout_ticks is not None else {}),
                **({"duration_ticks": s.duration_ticks} if s.duration_ticks is not None else {}),
                "success_tail_ticks": s.success_tail,
                "disturbance_policy": s.disturbance_policy,
                **({"object": names[s.object]} if s.object is not None else {}),
                "acquire_from": s.acquire_from,
                "release_to": s.release_to,
                **({"effect": s.effect} if s.effect is not None else {}),
            }
            for s in sc.skills
        ],
        "intentions": [
            {
                "id": i.id,
                "name": i.name,
                "kind": i.kind,
                **(
                    {"skill": skills_by_id[i.skill].name}
                    if i.skill is not None
                    else {}
                ),
            }
            for i in sc.intentions
        ],
        "robot": {
            "arms": {
                "left": chain_to_jsonable(sc.robot.left),
                "right": chain_to_jsonable(sc.robot.right),
            },
            "default_pose": {
                "left": list(sc.robot.default_pose_left),
                "right": list(sc.robot.default_pose_right),
            },
            "joint_speed": sc.robot.joint_speed,
        },
        "world": {
            "slots": {s.name: list(s.position) for s in sc.world.slots.values()},
            "objects": {
                names[pl.object]: {
                    "home_slot": pl.home_slot,
                    "radius": pl.radius,
                    "initial": pl.initial,
                }
                for pl in sc.world.placements.values()
            },
            "leader": {
                "rest_left": list(sc.world.leader.rest_left),
                "rest_right": list(sc.world.leader.rest_right),
                "head_z": sc.world.leader.head_z,
                "hand_radius": sc.world.leader.hand_radius,
            },
            "offers": {k: names[v] for k, v in sc.world.offers.items()},
        },
    }


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped inside the package (by bare name)."""
    return Path(__file__).parent / "scenarios" / f"{name}.scenario.json"


def bundled_scenario_names() -> list[str]:
    folder = Path(__file__).parent / "scenarios"
    suffix = ".scenario.json"
    return sorted(p.name[: -len(suffix)] for p in folder.glob(f"*{suffix}"))


def load_bundled(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))


def resolve_scenario(ref: str | Path) -> Scenario:
    """Load a scenario from a filesystem path or a bundled name."""
    p = Path(ref)
    if p.exists():
        return load_scenario(p)
    bundled = bundled_scenario_path(str(ref))
    if bundled.exists():
        return load_scenario(bundled)
    raise ScenarioError([f"scenario not found: {ref}"])
