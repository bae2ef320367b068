"""Safety supervision: the arm freezes while a hand is too close.

The leader asks for the can, then reaches toward the moving arm.  The
supervisor halts execution the tick the minimum keypoint distance drops
below the threshold and resumes only once it clears threshold+hysteresis,
so a hand hovering at the boundary cannot make the arm chatter.
"""

import numpy as np

from rhino import Session, load_bundled
from rhino.world import LeaderInput

scenario = load_bundled("dining")
session = Session(scenario, seed=23)
point_can = scenario.intention_by_name("Pointing Can").id

print(f"threshold {scenario.params.safety_threshold} m, "
      f"hysteresis {scenario.params.safety_hysteresis} m\n")


def gap_at(t: int) -> float:
    """Distance of the leader's hand from the right wrist, per tick."""
    if t < 45:
        return 0.28 - 0.006 * t  # approach at 6 mm/tick
    if t < 75:
        return 0.016  # hover well inside the threshold
    return min(0.016 + 0.010 * (t - 74), 0.65)  # back away at 10 mm/tick


frozen_poses = set()
for t in range(300):
    wrist = session.world.robot_keypoints()[10]
    hand = (wrist[0] + gap_at(t), wrist[1], wrist[2])
    outcome = session.step(LeaderInput(point_can if t < 60 else 0, hand=hand))
    if not outcome.safety.safe:
        frozen_poses.add(session.world.joints["right"].tobytes())

for event in session.log.events:
    if event.kind in ("safety_halt", "safety_resume", "skill_started",
                      "skill_succeeded"):
        print(f"  t={event.tick:4d}  {event.kind:16s} {event.payload()}")

halt = next(e.tick for e in session.log.events if e.kind == "safety_halt")
resume = next(e.tick for e in session.log.events if e.kind == "safety_resume")
print(f"\nheld for {resume - halt} ticks; "
      f"distinct arm poses while unsafe: {len(frozen_poses)} (frozen solid)")

# distances measured by the supervisor around the halt
d = [o for o in (session.log.events) if o.kind == "safety_halt"][0].payload()
print(f"halt pair: robot point {d['robot_point']}, hand point {d['hand_point']}")
