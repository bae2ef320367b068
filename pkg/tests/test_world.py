"""Simulated-world semantics: trajectory timing, the success-confirmation
and acknowledge protocol, disturbances, offers, effects, and motion
discipline of the follower arms."""

import numpy as np
import pytest

from rhino.occupancy import HandOccupancy
from rhino.planner import (
    AbortToReverse,
    ContinueSkill,
    FAILED,
    FINISH_SUCCEEDED,
    FINISH_TIMED_OUT,
    FinishToIdle,
    Hold,
    NOT_RUNNING,
    NoOp,
    RUNNING,
    SUCCEEDED,
    StartSkill,
)
from rhino.scenario import load_bundled
from rhino.world import (
    DISTURB_HOLD,
    LeaderInput,
    ManipExecutor,
    World,
    gesture_pose,
)


@pytest.fixture()
def dining_world():
    w = World(load_bundled("dining"), seed=7)
    w.apply_leader(LeaderInput(intention=0))
    return w


@pytest.fixture()
def office_world():
    w = World(load_bundled("office"), seed=7)
    w.apply_leader(LeaderInput(intention=0))
    return w


def drive_to_ack(world, skill_id, max_steps=2000):
    """StartSkill, continue until the success feedback, acknowledge it."""
    fb = world.step(StartSkill(skill_id))
    steps = 1
    while fb.kind != SUCCEEDED:
        assert fb.kind == RUNNING, f"unexpected feedback {fb}"
        fb = world.step(ContinueSkill(skill_id))
        steps += 1
        assert steps <= max_steps
    world.step(FinishToIdle(FINISH_SUCCEEDED))
    return steps


def test_success_feedback_arrives_on_the_third_signal_step(dining_world):
    w = dining_world
    skill = w.sc.skill(1)  # duration 160, success tail 25
    fb = w.step(StartSkill(1))
    for step in range(2, 160):
        fb = w.step(ContinueSkill(1))
        if step < 160 - 25 + 1:
            assert fb.success_signal == 0.0, f"early signal at step {step}"
        if step == 160 - 25 + 1 or step == 160 - 25 + 2:
            assert fb.kind == RUNNING and fb.success_signal == 1.0
        if step == 160 - 25 + 3:
            assert fb.kind == SUCCEEDED
            break
    assert fb.kind == SUCCEEDED
    # the feedback repeats until acknowledged, and nothing has committed yet
    assert w.step(ContinueSkill(1)).kind == SUCCEEDED
    assert w.occupancy == HandOccupancy(None, None)
    assert w.object_loc[skill.object] == ("slot", "can_spot")


def test_acknowledge_commits_objects_and_occupancy(dining_world):
    w = dining_world
    drive_to_ack(w, 1)
    assert w.occupancy == HandOccupancy(None, 1)
    assert w.object_loc[1] == ("robot_right",)
    # the held object rides on the gripper
    wrist = w.chains["right"].wrist(w.joints["right"])
    assert np.allclose(w.object_position(1), wrist)


def test_abort_discards_an_unacknowledged_success(dining_world):
    w = dining_world
    fb = w.step(StartSkill(1))
    while fb.kind != SUCCEEDED:
        fb = w.step(ContinueSkill(1))
    w.step(AbortToReverse(1, 2))  # planner chose to roll back instead
    assert w.occupancy == HandOccupancy(None, None)
    assert w.object_loc[1] == ("slot", "can_spot")  # grasp never committed
    fb = w.step(ContinueSkill(2))
    assert fb.kind == RUNNING  # the reverse is now running


def test_commanded_pose_retraces_exactly_while_withdrawing(dining_world):
    w = dining_world
    w.step(StartSkill(1))
    poses = {1: {a: q.copy() for a, q in w.executor.commanded_pose().items()}}
    for _ in range(49):
        w.step(ContinueSkill(1))
        poses[w.executor.k] = {
            a: q.copy() for a, q in w.executor.commanded_pose().items()
        }
    assert w.executor.k == 50
    w.apply_leader(LeaderInput(intention=2, disturbance=DISTURB_HOLD))
    for back in (49, 48, 47):
        w.step(ContinueSkill(1))
        assert w.executor.k == back
        now = w.executor.commanded_pose()
        for arm in ("left", "right"):
            assert np.array_equal(now[arm], poses[back][arm])
    assert w.step(ContinueSkill(1)).success_signal == 0.0


def test_pausing_policy_freezes_the_trajectory_index(dining_world):
    w = dining_world
    # Brush with Sponge starts from a plate+sponge grip
    w.occupancy = HandOccupancy(2, 3)
    w.object_loc[2] = ("robot_left",)
    w.object_loc[3] = ("robot_right",)
    w.step(StartSkill(8))
    for _ in range(20):
        w.step(ContinueSkill(8))
    k = w.executor.k
    w.apply_leader(LeaderInput(intention=9, disturbance=DISTURB_HOLD))
    for _ in range(10):
        w.step(ContinueSkill(8))
        assert w.executor.k == k  # paused, not withdrawn
    w.apply_leader(LeaderInput(intention=9))
    w.step(ContinueSkill(8))
    assert w.executor.k == k + 1


def test_unavailable_object_fails_the_start(dining_world):
    w = dining_world
    fb = w.step(StartSkill(3))  # plate is on the stack, not offered
    assert fb.kind == FAILED
    assert "not at" in fb.detail
    assert w.executor is None
    # the failure feedback clears once the planner finishes to idle
    fb = w.step(FinishToIdle("failed"))
    assert fb.kind == NOT_RUNNING


def test_offer_moves_the_object_and_reverts_when_withdrawn(dining_world):
    w = dining_world
    w.apply_leader(LeaderInput(intention=4))  # Handing Plate
    assert w.object_loc[2] == ("leader",)
    w.apply_leader(LeaderInput(intention=0))
    assert w.object_loc[2] == ("slot", "plate_stack")


def test_offered_acquire_and_handover_release(dining_world):
    w = dining_world
    w.apply_leader(LeaderInput(intention=4))
    drive_to_ack(w, 3)  # Get Plate from Human
    assert w.occupancy == HandOccupancy(2, None)
    assert w.object_loc[2] == ("robot_left",)
    w.apply_leader(LeaderInput(intention=0))  # offer over; object already taken
    assert w.object_loc[2] == ("robot_left",)
    drive_to_ack(w, 6)  # Handover Plate releases to the leader
    assert w.occupancy == HandOccupancy(None, None)
    assert w.object_loc[2] == ("leader",)


def test_lamp_toggle_and_stamp_effects(office_world):
    w = office_world
    drive_to_ack(w, 7)
    assert w.lamp_on is True
    drive_to_ack(w, 7)
    assert w.lamp_on is False
    drive_to_ack(w, 4)  # Pick Stamp
    assert w.occupancy == HandOccupancy(None, 3)
    drive_to_ack(w, 5)  # Stamp the Paper
    assert w.stamp_marks == 1
    assert w.occupancy == HandOccupancy(None, 3)  # still holding the stamp
    drive_to_ack(w, 6)  # Place Stamp
    assert w.occupancy == HandOccupancy(None, None)
    assert w.object_loc[3] == ("slot", "stamp_spot")


def test_stow_and_present_effects(office_world):
    w = office_world
    assert w.object_loc[1] == ("leader",)  # the cap starts with the leader
    drive_to_ack(w, 1)  # Settle Cap stows it on the rack
    assert w.object_loc[1] == ("slot", "cap_rack")
    drive_to_ack(w, 2)  # Handover Cap presents it back
    assert w.object_loc[1] == ("leader",)
    drive_to_ack(w, 3)  # Pick Book presents the book
    assert w.object_loc[2] == ("leader",)


def test_timeout_finish_discards_and_leaves_the_world_alone(dining_world):
    w = dining_world
    w.step(StartSkill(1))
    for _ in range(100):
        w.step(ContinueSkill(1))
    fb = w.step(FinishToIdle(FINISH_TIMED_OUT))
    assert fb.kind == NOT_RUNNING
    assert w.occupancy == HandOccupancy(None, None)
    assert w.object_loc[1] == ("slot", "can_spot")


def test_hold_freezes_joints_bit_identically(dining_world):
    w = dining_world
    w.step(StartSkill(1))
    for _ in range(30):
        w.step(ContinueSkill(1))
    frozen = {a: w.joints[a].copy() for a in ("left", "right")}
    for _ in range(10):
        w.step(Hold())
        for arm in ("left", "right"):
            assert np.array_equal(w.joints[arm], frozen[arm])
    k = w.executor.k
    w.step(Hold())
    assert w.executor.k == k  # the trajectory index is frozen too


def test_joint_deltas_never_exceed_the_speed_limit(dining_world):
    w = dining_world
    speed = w.sc.robot.joint_speed
    w.step(StartSkill(1))
    prev = {a: w.joints[a].copy() for a in ("left", "right")}
    for _ in range(400):
        w.apply_leader(LeaderInput(intention=0))
        w.step(ContinueSkill(1))
        for arm in ("left", "right"):
            delta = np.abs(w.joints[arm] - prev[arm]).max()
            assert delta <= speed + 1e-12
            prev[arm] = w.joints[arm].copy()


def test_idle_drift_returns_to_the_rest_pose(dining_world):
    w = dining_world
    w.joints["right"] = w.joints["right"] + 0.4
    for _ in range(60):
        w.apply_leader(LeaderInput(intention=0))
        w.step(NoOp())
    assert np.allclose(w.joints["right"], w.rest["right"], atol=1e-9)


def test_motion_chunks_are_five_frames(dining_world):
    w = dining_world
    w.step(StartSkill(12))  # Wave
    sizes = []
    for _ in range(11):
        sizes.append(len(w.executor.buffer))
        w.step(ContinueSkill(12))
    assert sizes == [4, 3, 2, 1, 0, 4, 3, 2, 1, 0, 4]


def test_reaching_gesture_tracks_a_moving_leader_hand(dining_world):
    w = dining_world
    w.step(StartSkill(13))  # Shake Hands targets the leader's right hand
    for _ in range(120):
        w.apply_leader(LeaderInput(intention=14))
        w.step(ContinueSkill(13))
    target = np.array([0.55, -0.35, 1.00])
    for _ in range(40):
        w.apply_leader(LeaderInput(intention=14, hand=tuple(target)))
        w.step(ContinueSkill(13))
    commanded = w.executor.last_pose["right"]
    reached = w.chains["right"].wrist(commanded)
    assert np.linalg.norm(reached - target) < 0.1


def test_snapshot_is_json_friendly(dining_world):
    import json

    w = dining_world
    w.step(StartSkill(1))
    doc = w.snapshot()
    text = json.dumps(doc)
    assert "keypoints" in doc and len(doc["keypoints"]) == 14
    assert doc["executor"]["skill"] == 1
    assert doc["occupancy"] == ["empty", "empty"]
    assert json.loads(text) == doc


def test_gesture_poses_are_deterministic_and_distinct():
    sc = load_bundled("office")
    a = gesture_pose(sc, 8, np.random.default_rng(3))
    b = gesture_pose(sc, 8, np.random.default_rng(3))
    for x, y in zip(a[:4], b[:4]):
        assert np.array_equal(np.asarray(x), np.asarray(y))
    assert a[4] == b[4]
    heads = {round(gesture_pose(sc, i, np.random.default_rng(0))[4], 4)
             for i in range(10)}
    assert len(heads) >= 5  # intentions land at distinct postures
