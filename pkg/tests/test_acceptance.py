"""Acceptance gate: one test per shipped guarantee.

Every budget and tolerance is pinned as a module constant so a regression
shows up as a red line here, not as a judgement call.  The tests lean on
the same independent oracles the unit suites use (exhaustive path
enumeration, transform-composition FK, the frozen skills transcription,
the frozen conformance scripts) so a pass means the engine agrees with
something that was computed another way.
"""

from __future__ import annotations

import itertools
import json
import time

import numpy as np
from fastapi.testclient import TestClient
from scipy.spatial.distance import cdist

from conformance_cases import CASES, check_case, run_case
from skills_table import (
    MOTION_SKILLS,
    OFFICE_MOTION_SKILLS,
    REFERENCE_SKILLS,
    REVERSE_PAIRS,
)
from test_graph import oracle_shortest
from test_kinematics import oracle_fk
from test_planner import fuzz_invariants
from test_scenario import skill_row

from rhino import (
    OccupancyGraph,
    Session,
    collect_gesture_samples,
    compute_metrics,
    dump_trace,
    load_bundled,
    run_script,
    verify_trace,
)
from rhino.episode import MODE_RAW
from rhino.features import (
    BODY,
    DETAILS,
    FEATURE_DIM,
    HAND_POSE,
    OCCUPANCY,
    fit_centroids,
)
from rhino.kinematics import Chain
from rhino.safety import hand_points
from rhino.server import build_app
from rhino.world import LeaderInput

TABLE_BUDGET_S = 1.0
PATH_BUDGET_S = 10.0
CONFORMANCE_BUDGET_S = 60.0
SAFETY_BUDGET_S = 10.0
FUZZ_TICKS_PER_SCENARIO = 50_000  # two scenarios -> 1e5 fuzzed ticks
FK_CONFIGS_PER_CHAIN = 5_000  # two chains -> 1e4 configurations
FK_TOL_M = 1e-9
HALT_TICK_TOL = 1  # halt may land one tick either side of the crossing
PERF_TICKS = 10_000
MEAN_TICK_BUDGET_S = 1e-3
P99_TICK_BUDGET_S = 33e-3
RECOGNIZER_MIN_ACCURACY = 0.99
CLUSTER_SIGMA = 0.01


# -- skills-table fidelity ---------------------------------------------------


def test_shipped_scenarios_reproduce_the_reference_skills_table():
    started = time.perf_counter()
    scenarios = {"dining": load_bundled("dining"), "office": load_bundled("office")}

    assert len(REFERENCE_SKILLS) == 23
    mismatches = []
    for scenario_name, name, start, end, arm in REFERENCE_SKILLS:
        got = skill_row(scenarios[scenario_name], name)
        if got != (start, end, arm):
            mismatches.append((scenario_name, name, got, (start, end, arm)))
    assert mismatches == []

    # no skills beyond the transcription (plus Idle, plus the shared
    # expressive motions the office scene reuses)
    dining_names = {s.name for s in scenarios["dining"].skills}
    office_names = {s.name for s in scenarios["office"].skills}
    assert dining_names == {
        n for s, n, *_ in REFERENCE_SKILLS if s == "dining"
    } | {"Idle"}
    assert office_names == {
        n for s, n, *_ in REFERENCE_SKILLS if s == "office"
    } | OFFICE_MOTION_SKILLS | {"Idle"}

    # reverse pairs exactly as transcribed, in whichever scene defines them
    seen = {}
    for sc in scenarios.values():
        for s in sc.skills:
            if s.reverse is not None:
                seen[s.name] = sc.skill(s.reverse).name
    assert seen == REVERSE_PAIRS

    assert time.perf_counter() - started < TABLE_BUDGET_S


# -- shortest-chain optimality ------------------------------------------------


def test_planned_skill_chains_are_shortest_for_every_occupancy_and_goal():
    started = time.perf_counter()
    for name in ("dining", "office"):
        sc = load_bundled(name)
        graph = OccupancyGraph(sc)
        goals = [s.start for s in sc.skills]
        for occ, goal in itertools.product(graph.nodes, goals):
            best_len, best_paths = oracle_shortest(sc, graph.nodes, occ, goal)
            found = graph.find_path(occ, goal)
            if best_len is None:
                assert found is None, (name, occ, goal)
            else:
                assert found is not None, (name, occ, goal)
                assert len(found.skills) == best_len, (name, occ, goal)
                assert found.skills == min(best_paths), (name, occ, goal)
    assert time.perf_counter() - started < PATH_BUDGET_S


# -- planner conformance ------------------------------------------------------


def test_scripted_episodes_and_long_fuzzing_match_the_planner_contract():
    started = time.perf_counter()
    assert len(CASES) >= 12
    for case in CASES:
        check_case(case, run_case(case))
    fuzz_invariants("dining", FUZZ_TICKS_PER_SCENARIO)
    fuzz_invariants("office", FUZZ_TICKS_PER_SCENARIO)
    assert time.perf_counter() - started < CONFORMANCE_BUDGET_S


# -- safety supervision -------------------------------------------------------


def test_safety_supervisor_halts_freezes_and_resumes_exactly():
    started = time.perf_counter()
    sc = load_bundled("dining")

    # forward kinematics against the homogeneous-matrix oracle
    rng = np.random.default_rng(77)
    for chain in (Chain(sc.robot.left), Chain(sc.robot.right)):
        worst = 0.0
        for q in rng.uniform(-np.pi, np.pi, size=(FK_CONFIGS_PER_CHAIN, chain.n)):
            origins, rotations = chain.fk(q)
            o_origins, o_rotations = oracle_fk(chain, q)
            worst = max(
                worst,
                float(np.abs(origins - o_origins).max()),
                float(np.abs(rotations - o_rotations).max()),
            )
        assert worst <= FK_TOL_M, worst

    # one episode: a skill runs while the leader's hand closes in on the
    # moving arm, hovers inside the threshold, then backs away monotonically
    session = Session(sc, seed=23)
    point_can = sc.intention_by_name("Pointing Can").id
    radius = sc.world.leader.hand_radius
    threshold = sc.params.safety_threshold
    hysteresis = sc.params.safety_hysteresis
    assert threshold == 0.1

    def gap_at(t: int) -> float:
        if t < 45:  # approach: 6 mm per tick
            return 0.28 - 0.006 * t
        if t < 75:  # hover inside the threshold
            return 0.016
        if t < 135:  # retreat: 10 mm per tick
            return 0.016 + 0.010 * (t - 74)
        return 0.65

    joints_after = []
    min_distances = []
    for t in range(400):
        wrist = session.world.robot_keypoints()[10]  # right wrist, pre-step
        robot_before = session.world.robot_keypoints()
        hand = (wrist[0] + gap_at(t), wrist[1], wrist[2])
        session.step(LeaderInput(point_can if t < 60 else 0, hand=hand))
        # the left hand pose the check saw this tick is still in the world
        leader = hand_points(session.world.leader_left, np.array(hand), radius)
        min_distances.append(float(cdist(robot_before, leader).min()))
        joints_after.append(
            np.concatenate(
                [session.world.joints["left"], session.world.joints["right"]]
            ).copy()
        )

    # independent hysteresis automaton over the measured distances
    expected_halts, expected_resumes = [], []
    safe = True
    for t, d in enumerate(min_distances):
        if safe and d < threshold:
            safe = False
            expected_halts.append(t)
        elif not safe and d >= threshold + hysteresis:
            safe = True
            expected_resumes.append(t)

    halts = [e.tick for e in session.log.events if e.kind == "safety_halt"]
    resumes = [e.tick for e in session.log.events if e.kind == "safety_resume"]
    assert len(expected_halts) == len(expected_resumes) == 1
    assert len(halts) == 1 and len(resumes) == 1
    assert abs(halts[0] - expected_halts[0]) <= HALT_TICK_TOL
    assert abs(resumes[0] - expected_resumes[0]) <= HALT_TICK_TOL

    # joint targets bit-identical for every held tick
    frozen = joints_after[halts[0] - 1]
    for t in range(halts[0], resumes[0]):
        assert np.array_equal(joints_after[t], frozen), t

    assert time.perf_counter() - started < SAFETY_BUDGET_S


# -- real-time headroom -------------------------------------------------------


def test_full_tick_cost_leaves_realtime_headroom():
    sc = load_bundled("dining")
    samples, labels = collect_gesture_samples(sc, seed=3)
    model = fit_centroids(samples, labels)
    session = Session(sc, seed=9, mode=MODE_RAW, model=model)
    ids = [i.id for i in sc.intentions]

    costs = np.empty(PERF_TICKS)
    for t in range(PERF_TICKS):
        inp = LeaderInput(ids[(t // 25) % len(ids)])
        t0 = time.perf_counter()
        session.step(inp)
        costs[t] = time.perf_counter() - t0

    assert float(costs.mean()) < MEAN_TICK_BUDGET_S, costs.mean()
    assert float(np.percentile(costs, 99)) < P99_TICK_BUDGET_S


# -- determinism and replay ---------------------------------------------------


def test_runs_are_bitwise_reproducible_and_traces_replay_clean():
    sc = load_bundled("dining")
    script = [
        {"from_tick": 0, "to_tick": 60, "intention": "Pointing Can"},
        {"from_tick": 60, "to_tick": 90, "intention": "Cancel"},
        {"from_tick": 120, "to_tick": 200, "intention": "Pointing Sponge",
         "disturbance": "hold"},
    ]
    first = run_script(sc, script, seed=31, ticks=320, scenario_ref="dining")
    second = run_script(sc, script, seed=31, ticks=320, scenario_ref="dining")
    assert dump_trace(first.header, first.events) == dump_trace(
        second.header, second.events
    )
    for arm in ("left", "right"):
        assert np.array_equal(first.world.joints[arm], second.world.joints[arm])
    assert first.world.object_loc == second.world.object_loc

    # replaying any generated trace reports zero divergences
    samples, labels = collect_gesture_samples(sc, seed=3)
    runs = [
        first,
        run_script(load_bundled("office"), [
            {"from_tick": 0, "to_tick": 80, "intention": "Pointing Book"},
        ], seed=6, ticks=400, scenario_ref="office"),
        run_script(sc, [
            {"from_tick": 0, "to_tick": 90, "intention": "Waving"},
        ], seed=5, ticks=150, scenario_ref="dining", mode=MODE_RAW,
            model=fit_centroids(samples, labels), model_ref="fit:3:dining"),
    ]
    for result in runs:
        report = verify_trace(result.header, result.events)
        assert report.ok, report.divergences
        assert report.divergences == []

    # a wire-driven scripted session leaves the identical trace
    def barrier(ws):
        ws.send_text(json.dumps({"t": "sync"}))
        while True:
            frame = json.loads(ws.receive_text())
            if frame.get("t") == "error" and "'sync'" in frame["error"]:
                return

    with TestClient(build_app()) as client:
        created = client.post("/sessions", json={"scenario": "dining", "seed": 17})
        assert created.status_code == 200
        sid = created.json()["id"]
        with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
            ws.send_text(json.dumps({"t": "intention", "id": 2, "held": True}))
            ws.send_text(json.dumps({"t": "step", "n": 40}))
            ws.send_text(json.dumps({"t": "intention", "id": 2, "held": False}))
            ws.send_text(json.dumps({"t": "step", "n": 80}))
            barrier(ws)
        wire_trace = client.get(f"/sessions/{sid}/trace").text
    headless = run_script(
        sc,
        [{"from_tick": 0, "to_tick": 40, "intention": "Pointing Can"}],
        seed=17,
        ticks=120,
        scenario_ref="dining",
    )
    assert wire_trace == dump_trace(headless.header, headless.events)


# -- reference recognizer -----------------------------------------------------


def test_recognizer_separates_tight_clusters_over_the_fixed_encoding():
    assert FEATURE_DIM == 77
    blocks = (BODY, HAND_POSE, OCCUPANCY, DETAILS)
    assert [b.stop - b.start for b in blocks] == [36, 12, 10, 19]
    assert BODY.start == 0 and DETAILS.stop == FEATURE_DIM
    for left, right in zip(blocks, blocks[1:]):
        assert left.stop == right.start

    # synthetic separable clusters: distinct centers, sigma-0.01 noise
    rng = np.random.default_rng(2026)
    classes = 18
    centers = rng.uniform(-1.0, 1.0, size=(classes, FEATURE_DIM))
    labels = np.repeat(np.arange(classes), 40)
    train = centers[labels] + rng.normal(0.0, CLUSTER_SIGMA, (len(labels), FEATURE_DIM))
    model = fit_centroids(train, labels)
    probe_labels = np.repeat(np.arange(classes), 60)
    probes = centers[probe_labels] + rng.normal(
        0.0, CLUSTER_SIGMA, (len(probe_labels), FEATURE_DIM)
    )
    hits = sum(
        model.classify(vec) == label for vec, label in zip(probes, probe_labels)
    )
    assert hits / len(probe_labels) >= RECOGNIZER_MIN_ACCURACY

    # the same bar holds for gesture features harvested from the engine,
    # fitting on one seed and scoring on a fresh one
    sc = load_bundled("dining")
    samples, sample_labels = collect_gesture_samples(sc, seed=3)
    harvested = fit_centroids(samples, sample_labels)
    fresh, fresh_labels = collect_gesture_samples(sc, seed=4)
    hits = sum(
        harvested.classify(vec) == label
        for vec, label in zip(fresh, fresh_labels)
    )
    assert hits / len(fresh_labels) >= RECOGNIZER_MIN_ACCURACY


# -- latency metrics ----------------------------------------------------------


def test_latency_metrics_equal_the_debounce_windows():
    sc = load_bundled("dining")
    n_r = sc.params.n_r
    k_2 = sc.params.k_2

    clean = run_script(
        sc,
        [{"from_tick": 0, "to_tick": 60, "intention": "Pointing Can"}],
        seed=5,
        ticks=160,
        scenario_ref="dining",
    )
    metrics = compute_metrics(clean.header, clean.events)
    assert metrics.reaction_latencies == [n_r - 1]
    assert metrics.interruption_latencies == []

    interrupted = run_script(
        sc,
        [
            {"from_tick": 0, "to_tick": 60, "intention": "Pointing Can"},
            {"from_tick": 60, "to_tick": 90, "intention": "Cancel"},
        ],
        seed=5,
        ticks=400,
        scenario_ref="dining",
    )
    metrics = compute_metrics(interrupted.header, interrupted.events)
    assert metrics.reaction_latencies == [n_r - 1]
    assert metrics.interruption_latencies == [k_2 - 1]
