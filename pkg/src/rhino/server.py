"""Live session service: a small HTTP surface for session management plus a
JSON-over-WebSocket stream for driving simulations interactively.

HTTP::

    GET  /scenarios            bundled scenarios with their palettes
    POST /sessions             {"scenario": name, "seed"?, "mode"?, "model"?}
    GET  /sessions/{id}/trace  the session so far, as trace JSONL

WebSocket (``/sessions/{id}/ws``), UTF-8 JSON text frames.  Client to
server::

    {"t": "intention", "id": 2, "held": true}   pin the leader's intention
    {"t": "pause"} / {"t": "resume"}            pacing only
    {"t": "speed", "x": 2.0}                    pacing only
    {"t": "step", "n": 5}                       advance N ticks immediately
    {"t": "reset"}                              back to tick 0, paused
    {"t": "disturb", "kind": "hold", "ticks": 30}

Disturbance kinds: "hold" (leader's hand rests on the workpiece, the
executor pauses or withdraws), "loot" (leader takes the object the
follower is working with), "near" (leader's right hand tracks just beside
the follower's wrist, exercising the proximity supervisor; recorded as a
plain per-tick hand override so the trace replays headlessly).

Server to client::

    {"t": "hello", ...}     session parameters, once per connection
    {"t": "event", ...}     every trace event, lossless; a client buffering
                            more than the event budget is disconnected
    {"t": "snapshot", ...}  planner + world state every Nth tick, best
                            effort (skipped for clients that lag)
    {"t": "error", "error": "..."}

Sessions are created paused at tick 0; ticks advance at tick_rate * speed
per wall-clock second while unpaused, or explicitly via "step", which is
how scripted clients get deterministic traces.  Everything runs on the
event loop, so message handling is serialized with the tick loop and a
wire-driven session produces the same trace as a scripted run fed the
same per-tick inputs.
"""

from __future__ import annotations

import asyncio
import json
import math
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .episode import MODE_DIRECT, MODE_RAW, Session, fit_ref, model_from_ref
from .features import CentroidModel
from .scenario import (
    Scenario,
    ScenarioError,
    bundled_scenario_names,
    load_bundled,
    resolve_scenario,
)
from .trace import dump_trace
from .world import DISTURB_KINDS, LeaderInput

SNAPSHOT_DECIMATION = 3  # every 3rd tick => 10 Hz to clients at 30 Hz sim
EVENT_BUFFER_LIMIT = 4096  # frames a slow client may lag before disconnect
SNAPSHOT_SKIP_DEPTH = 64  # lag beyond which best-effort snapshots are skipped
MAX_STEP = 10_000

DISTURB_NEAR = "near"
WIRE_DISTURB_KINDS = DISTURB_KINDS + (DISTURB_NEAR,)
DISTURB_DEFAULT_TICKS = {"hold": 30, "near": 30, "loot": 1}
NEAR_GAP = 0.03  # metres between leader hand and follower wrist while "near"
WRIST_POINT = 13  # follower keypoint the "near" hand shadows


def palette(sc: Scenario) -> dict:
    """The static facts a client needs to drive a scenario."""
    return {
        "name": sc.name,
        "params": {
            "n_r": sc.params.n_r,
            "k_2": sc.params.k_2,
            "tick_rate": sc.params.tick_rate,
            "safety_threshold": sc.params.safety_threshold,
        },
        "intentions": [
            {"id": i.id, "name": i.name, "kind": i.kind, "skill": i.skill}
            for i in sc.intentions
        ],
        "skills": [
            {"id": s.id, "name": s.name, "kind": s.kind} for s in sc.skills
        ],
        "objects": [{"id": o.id, "name": o.name} for o in sc.objects],
    }


@dataclass
class _Client:
    queue: asyncio.Queue = field(default_factory=asyncio.Queue)
    live: bool = True  # cleared when the event budget is blown


class LiveSession:
    """One simulated session plus its pacing state and connected clients."""

    def __init__(self, sid: str, scenario: Scenario, scenario_ref: str,
                 seed: int, mode: str, model: CentroidModel | None,
                 model_ref: str | None, decimation: int,
                 event_buffer: int = EVENT_BUFFER_LIMIT):
        self.id = sid
        self.sc = scenario
        self.scenario_ref = scenario_ref
        self.seed = seed
        self.mode = mode
        self.model = model
        self.model_ref = model_ref
        self.decimation = decimation
        self.event_buffer = event_buffer
        self.session = Session(scenario, seed, mode=mode, model=model)
        self.paused = True
        self.speed = 1.0
        self.held = scenario.idle_intention.id
        self.disturb_kind: str | None = None
        self.disturb_left = 0
        self.last_outcome = None
        self.clients: dict[WebSocket, _Client] = {}
        self.pacer: asyncio.Task | None = None

    # -- ticking ------------------------------------------------------------

    def period(self) -> float:
        return 1.0 / (self.sc.params.tick_rate * self.speed)

    def _next_input(self) -> LeaderInput:
        hand = None
        disturbance = None
        if self.disturb_left > 0:
            self.disturb_left -= 1
            if self.disturb_kind == DISTURB_NEAR:
                wrist = self.session.world.robot_keypoints()[WRIST_POINT]
                hand = (float(wrist[0]) + NEAR_GAP, float(wrist[1]),
                        float(wrist[2]))
            else:
                disturbance = self.disturb_kind
        return LeaderInput(self.held, hand, disturbance)

    def step(self, n: int = 1):
        for _ in range(n):
            already = len(self.session.log.events)
            self.last_outcome = self.session.step(self._next_input())
            frames = [
                {"t": "event", **ev.to_jsonable()}
                for ev in self.session.log.events[already:]
            ]
            if self.session.tick % self.decimation == 0:
                frames.append(self.snapshot_frame())
            self._fan_out(frames)

    def reset(self):
        self.session = Session(self.sc, self.seed, mode=self.mode,
                               model=self.model)
        self.paused = True
        self.held = self.sc.idle_intention.id
        self.disturb_kind, self.disturb_left = None, 0
        self.last_outcome = None
        self._fan_out([self.snapshot_frame()])

    # -- frames -------------------------------------------------------------

    def hello_frame(self) -> dict:
        return {
            "t": "hello",
            "session": self.id,
            "scenario": palette(self.sc),
            "mode": self.mode,
            "tick": self.session.tick,
            "paused": self.paused,
            "speed": self.speed,
            "decimation": self.decimation,
        }

    def snapshot_frame(self) -> dict:
        st = self.session.state
        out = self.last_outcome
        if out is None:
            safety = {"safe": True, "distance": None,
                      "robot_point": -1, "hand_point": -1}
        else:
            d = out.safety.min_distance
            safety = {
                "safe": out.safety.safe,
                "distance": float(d) if math.isfinite(d) else None,
                "robot_point": out.safety.robot_point,
                "hand_point": out.safety.hand_point,
            }
        return {
            "t": "snapshot",
            "tick": self.session.tick,
            "phase": st.phase,
            "skill": st.current,
            "reversing": st.current_is_reverse,
            "queue": list(st.pending),
            "streak": st.streak,
            "candidate": st.candidate,
            "active_intention": st.active_intention,
            "held": self.held,
            "paused": self.paused,
            "speed": self.speed,
            "safety": safety,
            "world": self.session.world.snapshot(),
        }

    def trace_text(self) -> str:
        header = self.session.header(self.scenario_ref, self.seed,
                                     self.model_ref)
        return dump_trace(header, self.session.log.events)

    def _fan_out(self, frames: list[dict]):
        for client in self.clients.values():
            if not client.live:
                continue
            for frame in frames:
                lag = client.queue.qsize()
                if frame["t"] == "snapshot" and lag > SNAPSHOT_SKIP_DEPTH:
                    continue  # snapshots are best effort
                if lag >= self.event_buffer:
                    client.live = False
                    client.queue.put_nowait({
                        "t": "error",
                        "error": f"client lagged past {self.event_buffer} "
                                 "frames; disconnecting",
                    })
                    client.queue.put_nowait(None)  # tells the sender to close
                    break
                client.queue.put_nowait(frame)

    # -- client messages ------------------------------------------------------

    def handle(self, msg: dict) -> str | None:
        """Apply one wire message; returns an error string for bad ones."""
        kind = msg.get("t")
        if kind == "intention":
            if not msg.get("held", True):
                self.held = self.sc.idle_intention.id
                return None
            try:
                intention = self.sc.intention(int(msg["id"]))
            except (KeyError, TypeError, ValueError):
                return f"unknown intention id {msg.get('id')!r}"
            self.held = intention.id
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "speed":
            try:
                x = float(msg["x"])
            except (KeyError, TypeError, ValueError):
                return "speed needs a number x"
            if not (0.01 <= x <= 100.0):
                return "speed x must be within [0.01, 100]"
            self.speed = x
        elif kind == "step":
            try:
                n = int(msg.get("n", 1))
            except (TypeError, ValueError):
                return "step n must be an integer"
            if not 1 <= n <= MAX_STEP:
                return f"step n must be within [1, {MAX_STEP}]"
            self.step(n)
        elif kind == "reset":
            self.reset()
        elif kind == "disturb":
            which = msg.get("kind")
            if which not in WIRE_DISTURB_KINDS:
                return f"disturbance kind must be one of {WIRE_DISTURB_KINDS}"
            try:
                ticks = int(msg.get("ticks", DISTURB_DEFAULT_TICKS[which]))
            except (TypeError, ValueError):
                return "disturb ticks must be an integer"
            if not 1 <= ticks <= 100_000:
                return "disturb ticks must be within [1, 100000]"
            self.disturb_kind, self.disturb_left = which, ticks
        else:
            return f"unknown message type {kind!r}"
        return None


async def _pace(live: LiveSession):
    while True:
        await asyncio.sleep(live.period())
        if not live.paused:
            live.step(1)


async def _drain(ws: WebSocket, client: _Client):
    while True:
        frame = await client.queue.get()
        if frame is None:
            await ws.close(code=1011, reason="event buffer overflow")
            return
        await ws.send_text(json.dumps(frame, sort_keys=True))


def build_app(snapshot_decimation: int = SNAPSHOT_DECIMATION,
              event_buffer: int = EVENT_BUFFER_LIMIT) -> FastAPI:
    sessions: dict[str, LiveSession] = {}

    @asynccontextmanager
    async def lifespan(_app):
        yield
        for live in sessions.values():
            if live.pacer is not None:
                live.pacer.cancel()

    app = FastAPI(title="interaction session service", lifespan=lifespan)
    # the operator console may be served from another origin (or a file)
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.sessions = sessions

    @app.get("/scenarios")
    async def scenarios():
        return [palette(load_bundled(name))
                for name in bundled_scenario_names()]

    @app.post("/sessions")
    async def create_session(body: dict):
        ref = body.get("scenario")
        if not isinstance(ref, str):
            raise HTTPException(400, "body needs a scenario name")
        try:
            scenario = resolve_scenario(ref)
        except ScenarioError as err:
            raise HTTPException(404, str(err)) from None
        try:
            seed = int(body.get("seed", 0))
        except (TypeError, ValueError):
            raise HTTPException(400, "seed must be an integer") from None
        mode = body.get("mode", MODE_DIRECT)
        if mode not in (MODE_DIRECT, MODE_RAW):
            raise HTTPException(400, f"unknown mode {mode!r}")
        model = None
        model_ref = body.get("model")
        if mode == MODE_RAW:
            model_ref = model_ref or fit_ref(ref, seed)
            try:
                model = model_from_ref(model_ref)
            except (OSError, ValueError) as err:
                raise HTTPException(400, f"bad model: {err}") from None
        elif model_ref is not None:
            raise HTTPException(400, "model only applies to raw mode")

        sid = uuid.uuid4().hex[:12]
        live = LiveSession(sid, scenario, ref, seed, mode, model, model_ref,
                           snapshot_decimation, event_buffer)
        live.pacer = asyncio.get_running_loop().create_task(_pace(live))
        sessions[sid] = live
        return {
            "id": sid,
            "scenario": ref,
            "seed": seed,
            "mode": mode,
            "model": model_ref,
            "tick": 0,
            "paused": True,
            "ws": f"/sessions/{sid}/ws",
            "trace": f"/sessions/{sid}/trace",
        }

    @app.get("/sessions/{sid}/trace")
    async def session_trace(sid: str):
        live = sessions.get(sid)
        if live is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return PlainTextResponse(live.trace_text(),
                                 media_type="application/x-ndjson")

    @app.websocket("/sessions/{sid}/ws")
    async def session_ws(ws: WebSocket, sid: str):
        await ws.accept()
        live = sessions.get(sid)
        if live is None:
            await ws.send_text(json.dumps(
                {"t": "error", "error": f"unknown session {sid!r}"},
                sort_keys=True))
            await ws.close(code=1008)
            return
        client = _Client()
        live.clients[ws] = client
        client.queue.put_nowait(live.hello_frame())
        for ev in live.session.log.events:  # lossless: replay the backlog
            client.queue.put_nowait({"t": "event", **ev.to_jsonable()})
        client.queue.put_nowait(live.snapshot_frame())
        sender = asyncio.get_running_loop().create_task(_drain(ws, client))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                    if not isinstance(msg, dict):
                        raise ValueError("not an object")
                except ValueError:
                    client.queue.put_nowait(
                        {"t": "error", "error": "frames must be JSON objects"}
                    )
                    continue
                error = live.handle(msg)
                if error is not None:
                    client.queue.put_nowait({"t": "error", "error": error})
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            live.clients.pop(ws, None)

    return app
