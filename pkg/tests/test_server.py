"""Session service tests: HTTP surface, wire protocol, and the guarantee
that a wire-driven session produces the same trace as a headless run."""

import time

import pytest
from starlette.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from rhino.episode import run_script, verify_trace
from rhino.scenario import resolve_scenario
from rhino.server import LiveSession, _Client, build_app
from rhino.trace import dump_trace, parse_trace

SEED = 17


@pytest.fixture()
def client():
    with TestClient(build_app()) as c:
        yield c


def make_session(client, **overrides):
    body = {"scenario": "dining", "seed": SEED, **overrides}
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200
    return resp.json()


def drain_until_sync(ws):
    """Deterministic barrier: everything sent before the marker message has
    been fully processed once its error frame comes back."""
    ws.send_json({"t": "sync"})
    frames = []
    while True:
        frame = ws.receive_json()
        if frame.get("t") == "error" and "'sync'" in frame.get("error", ""):
            return frames
        frames.append(frame)


def open_feed(client, sid):
    """Connect and consume the hello frame, backlog and initial snapshot."""
    ws = client.websocket_connect(f"/sessions/{sid}/ws")
    ws.__enter__()
    hello = ws.receive_json()
    assert hello["t"] == "hello"
    backlog = []
    while True:
        frame = ws.receive_json()
        if frame["t"] == "snapshot":
            return ws, hello, backlog, frame
        backlog.append(frame)


def events_of(frames, kind=None):
    out = [f for f in frames if f["t"] == "event"]
    if kind is not None:
        out = [f for f in out if f["kind"] == kind]
    return out


# -- HTTP surface -------------------------------------------------------------


def test_scenario_listing_carries_the_palette(client):
    resp = client.get("/scenarios")
    assert resp.status_code == 200
    listing = {sc["name"]: sc for sc in resp.json()}
    assert set(listing) == {"dining", "office"}
    dining = listing["dining"]
    assert dining["params"]["n_r"] == 15
    names = {i["name"]: i for i in dining["intentions"]}
    assert names["Pointing Can"]["skill"] == 1
    assert any(s["name"] == "Pick Can" for s in dining["skills"])


def test_create_session_starts_paused_at_tick_zero(client):
    a = make_session(client)
    b = make_session(client)
    assert a["id"] != b["id"]
    assert a["paused"] and a["tick"] == 0
    trace = client.get(a["trace"])
    header, events = parse_trace(trace.text)
    assert header.ticks == 0 and events == []


def test_create_session_rejects_bad_requests(client):
    assert client.post("/sessions", json={"scenario": "nope"}).status_code == 404
    assert client.post("/sessions", json={}).status_code == 400
    assert (
        client.post("/sessions", json={"scenario": "dining", "mode": "psychic"})
        .status_code
        == 400
    )
    assert (
        client.post(
            "/sessions", json={"scenario": "dining", "model": "m.json"}
        ).status_code
        == 400
    )
    assert client.get("/sessions/nope/trace").status_code == 404


# -- wire protocol ------------------------------------------------------------


def test_held_intention_starts_the_mapped_skill(client):
    info = make_session(client)
    ws, hello, backlog, snap = open_feed(client, info["id"])
    assert backlog == [] and snap["tick"] == 0
    assert hello["scenario"]["name"] == "dining"

    ws.send_json({"t": "intention", "id": 2, "held": True})
    ws.send_json({"t": "step", "n": 20})
    frames = drain_until_sync(ws)
    started = events_of(frames, "skill_started")
    assert started == [
        {"t": "event", "tick": 14, "kind": "skill_started",
         "skill": 1, "reason": "intention"}
    ]
    last_snap = [f for f in frames if f["t"] == "snapshot"][-1]
    assert last_snap["skill"] == 1 and last_snap["phase"] == "executing"
    ws.__exit__(None, None, None)


def test_wire_session_trace_equals_headless_run(client):
    info = make_session(client)
    with client.websocket_connect(f"/sessions/{info['id']}/ws") as ws:
        ws.send_json({"t": "intention", "id": 2, "held": True})
        ws.send_json({"t": "step", "n": 40})
        ws.send_json({"t": "intention", "held": False})
        ws.send_json({"t": "step", "n": 80})
        drain_until_sync(ws)

    wire_text = client.get(info["trace"]).text
    script = [{"from_tick": 0, "to_tick": 40, "intention": "Pointing Can"}]
    headless = run_script(resolve_scenario("dining"), script, seed=SEED,
                          ticks=120, scenario_ref="dining")
    assert wire_text == dump_trace(headless.header, headless.events)


def test_near_disturbance_halts_and_the_trace_still_replays(client):
    info = make_session(client)
    with client.websocket_connect(f"/sessions/{info['id']}/ws") as ws:
        ws.send_json({"t": "intention", "id": 2, "held": True})
        ws.send_json({"t": "step", "n": 30})
        ws.send_json({"t": "disturb", "kind": "near", "ticks": 15})
        ws.send_json({"t": "step", "n": 60})
        frames = drain_until_sync(ws)

    halts = events_of(frames, "safety_halt")
    assert len(halts) == 1 and len(events_of(frames, "safety_resume")) == 1

    header, events = parse_trace(client.get(info["trace"]).text)
    assert any("hand" in dict(e) for e in header.script)
    report = verify_trace(header, events)
    assert report.ok, report.divergences


def test_hold_disturbance_round_trips_through_the_trace(client):
    info = make_session(client)
    with client.websocket_connect(f"/sessions/{info['id']}/ws") as ws:
        ws.send_json({"t": "intention", "id": 2, "held": True})
        ws.send_json({"t": "step", "n": 30})
        ws.send_json({"t": "disturb", "kind": "hold", "ticks": 10})
        ws.send_json({"t": "step", "n": 30})
        drain_until_sync(ws)

    header, events = parse_trace(client.get(info["trace"]).text)
    assert any(dict(e).get("disturbance") == "hold" for e in header.script)
    report = verify_trace(header, events)
    assert report.ok, report.divergences


def test_raw_mode_session_classifies_wire_driven_gestures(client):
    info = make_session(client, mode="raw")
    assert info["model"] == f"fit:{SEED}:dining"
    with client.websocket_connect(f"/sessions/{info['id']}/ws") as ws:
        ws.send_json({"t": "intention", "id": 13, "held": True})  # Waving
        ws.send_json({"t": "step", "n": 30})
        frames = drain_until_sync(ws)

    started = events_of(frames, "skill_started")
    assert [(f["tick"], f["skill"]) for f in started] == [(14, 12)]

    header, events = parse_trace(client.get(info["trace"]).text)
    assert header.mode == "raw" and header.model == info["model"]
    report = verify_trace(header, events)
    assert report.ok, report.divergences


def test_bad_frames_get_error_replies_and_the_connection_survives(client):
    info = make_session(client)
    ws, *_ = open_feed(client, info["id"])
    ws.send_text("not json")
    ws.send_json({"t": "intention", "id": 999})
    ws.send_json({"t": "speed", "x": 0.0})
    ws.send_json({"t": "disturb", "kind": "gremlins"})
    ws.send_json({"t": "step", "n": 0})
    ws.send_json({"t": "step", "n": 3})
    frames = drain_until_sync(ws)
    errors = [f["error"] for f in frames if f["t"] == "error"]
    assert len(errors) == 5
    assert any("JSON" in e for e in errors)
    assert any("intention" in e for e in errors)
    snaps = [f for f in frames if f["t"] == "snapshot"]
    assert snaps and snaps[-1]["tick"] == 3  # the good step still ran
    ws.__exit__(None, None, None)


def test_reset_returns_to_the_initial_state(client):
    info = make_session(client)
    with client.websocket_connect(f"/sessions/{info['id']}/ws") as ws:
        ws.send_json({"t": "intention", "id": 2, "held": True})
        ws.send_json({"t": "step", "n": 30})
        ws.send_json({"t": "reset"})
        frames = drain_until_sync(ws)

    last = [f for f in frames if f["t"] == "snapshot"][-1]
    assert last["tick"] == 0 and last["paused"]
    header, events = parse_trace(client.get(info["trace"]).text)
    assert header.ticks == 0 and events == []


def test_snapshots_arrive_at_the_configured_decimation(client):
    info = make_session(client)
    with client.websocket_connect(f"/sessions/{info['id']}/ws") as ws:
        first = ws.receive_json()
        assert first["t"] == "hello"
        assert ws.receive_json()["t"] == "snapshot"  # connect snapshot
        ws.send_json({"t": "step", "n": 9})
        frames = drain_until_sync(ws)

    ticks = [f["tick"] for f in frames if f["t"] == "snapshot"]
    assert ticks == [3, 6, 9]


def test_event_backlog_replays_to_late_joiners(client):
    info = make_session(client)
    with client.websocket_connect(f"/sessions/{info['id']}/ws") as ws:
        ws.send_json({"t": "intention", "id": 2, "held": True})
        ws.send_json({"t": "step", "n": 20})
        live_events = events_of(drain_until_sync(ws))

    ws2, _, backlog, snap = open_feed(client, info["id"])
    assert events_of(backlog) == live_events
    assert snap["tick"] == 20
    ws2.__exit__(None, None, None)


def test_unknown_session_socket_gets_an_error_and_closes(client):
    with client.websocket_connect("/sessions/nope/ws") as ws:
        frame = ws.receive_json()
        assert frame["t"] == "error" and "nope" in frame["error"]
        with pytest.raises(WebSocketDisconnect):
            ws.receive_json()


# -- pacing -------------------------------------------------------------------


def test_speed_changes_the_tick_period_not_the_semantics():
    sc = resolve_scenario("dining")
    live = LiveSession("x", sc, "dining", SEED, "direct", None, None, 3)
    base = live.period()
    assert base == pytest.approx(1 / 30)
    assert live.handle({"t": "speed", "x": 0.5}) is None
    assert live.period() == pytest.approx(2 * base)
    assert live.handle({"t": "speed", "x": 2.0}) is None
    assert live.period() == pytest.approx(base / 2)


def test_paused_sessions_hold_still_and_resumed_ones_advance(client):
    info = make_session(client)

    def current_tick():
        header, _ = parse_trace(client.get(info["trace"]).text)
        return header.ticks

    time.sleep(0.2)
    assert current_tick() == 0  # created paused: nothing moves

    with client.websocket_connect(f"/sessions/{info['id']}/ws") as ws:
        ws.send_json({"t": "speed", "x": 10.0})
        ws.send_json({"t": "resume"})
        drain_until_sync(ws)
        deadline = time.time() + 5.0
        while current_tick() < 5 and time.time() < deadline:
            time.sleep(0.05)
        ws.send_json({"t": "pause"})
        drain_until_sync(ws)
    assert current_tick() >= 5


# -- backpressure -------------------------------------------------------------


def test_lagging_clients_are_cut_off_with_a_diagnostic():
    sc = resolve_scenario("dining")
    live = LiveSession("x", sc, "dining", SEED, "direct", None, None,
                       decimation=1, event_buffer=3)
    slow = _Client()
    live.clients["fake-socket"] = slow
    live.step(10)  # decimation 1: one snapshot frame per tick, nobody reads

    assert not slow.live
    drained = []
    while not slow.queue.empty():
        drained.append(slow.queue.get_nowait())
    assert drained[-1] is None  # sender sentinel: close the socket
    assert drained[-2]["t"] == "error" and "lagged" in drained[-2]["error"]
    assert len(drained) == 5  # 3 buffered frames + diagnostic + sentinel
    # the session itself kept running regardless of the stuck client
    assert live.session.tick == 10
