"""Realtime session service: the engine behind a full-duplex socket protocol.

Protocol ``lifeloop/1``: UTF-8 JSON text frames over a WebSocket, one object
per frame, monotone gap-free sequence numbers per direction. Clients send
hello / sample / reset; the server answers welcome / directive / state /
heartbeat / error. Each connection owns one engine session; sessions are
fully isolated. See docs/protocol.md for every field.
"""

from __future__ import annotations

import asyncio
import json
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .behavior import BehaviorSample, Moving, bind_clue
from .engine import (
    CameraDirective,
    Engine,
    EngineConfig,
    EngineState,
    NonMonotonicTimeError,
)
from .story import Guard, StoryGraph

PROTOCOL_VERSION = "lifeloop/1"
DEFAULT_PORT = 7360
PUSH_SLOWLY_HINT = "Push slowly"
STOP_HINT = "Try stopping here"


def hint_text(state: EngineState, graph: StoryGraph,
              config: EngineConfig) -> str | None:
    """Guidance for the visitor: slow down, or stop here to branch the story."""
    if (isinstance(state.motion, Moving)
            and abs(state.motion.omega_deg_s)
            > config.push_slowly_factor * graph.nominal_speed()):
        return PUSH_SLOWLY_HINT
    if (state.mode == "spine"
            and state.stage_id not in state.fired
            and state.local_progress >= config.trigger_window
            and Guard.STOP_WALKING in graph.guard_edges(state.stage_id)):
        return STOP_HINT
    return None


def directive_wire(d: CameraDirective) -> dict:
    """Structured payload for one directive; field set is fixed by the protocol."""
    return {
        "t": d.t,
        "clip": d.clip,
        "frame": d.frame,
        "shot": d.shot.value,
        "role": d.shot.narrative_role,
        "vertical": d.angle.vertical.value,
        "horizontal": d.angle.horizontal.value,
        "movement": d.movement.kind.value,
        "speed": d.movement.speed_deg_s,
        "form": d.form.wire,
        "clue": d.clue,
        "transition": d.transition,
    }


def directive_line_from_wire(msg: dict) -> str:
    """Rebuild the canonical directive line from a wire message (parity checks)."""
    return ",".join([
        f"{msg['t']:.3f}", msg["clip"], str(msg["frame"]), msg["shot"],
        msg["role"], msg["vertical"], msg["horizontal"], msg["movement"],
        f"{msg['speed']:.3f}", msg["form"], msg["clue"], msg["transition"],
    ])


class ProtocolViolation(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class Session:
    """One connected client driving one engine instance."""

    engine: Engine
    script_name: str
    script_hash: str
    id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])
    created_at: float = field(default_factory=time.time)
    state: EngineState | None = None
    seq_out: int = 0
    seq_in: int = 0
    last_user_id: str | None = None
    last_sample_wall: float = field(default_factory=time.monotonic)

    def __post_init__(self) -> None:
        self.state = self.engine.init()

    # message builders (seq assigned at send time by the connection)

    def welcome_msg(self) -> dict:
        graph = self.engine.graph
        return {
            "type": "welcome",
            "v": PROTOCOL_VERSION,
            "session": self.id,
            "script": {
                "name": graph.name,
                "hash": self.script_hash,
                "rotation_degrees": graph.rotation_degrees,
                "nominal_rotation_s": graph.nominal_rotation_s,
            },
            "stages": [
                {
                    "name": s.id,
                    "start_deg": s.segment.start_deg,
                    "end_deg": s.segment.end_deg,
                    "age_label": s.age_label,
                }
                for s in graph.scenes_in_order()
            ],
        }

    def state_msg(self) -> dict:
        st = self.state
        if isinstance(st.motion, Moving):
            motion = {"kind": "moving", "omega": st.motion.omega_deg_s}
        else:
            motion = {"kind": "paused", "since": st.motion.since}
        return {
            "type": "state",
            "t": st.t,
            "age": st.age,
            "stage": st.stage_id,
            "lap": st.lap,
            "mode": st.mode,
            "plot": st.plot_id,
            "local_progress": st.local_progress,
            "cumulative_deg": st.cumulative_deg,
            "motion": motion,
            "hint": hint_text(st, self.engine.graph, self.engine.config),
            "clue": bind_clue(self.last_user_id, self.engine.graph.clue),
            "path": [[f.stage, f.guard] for f in st.fire_log if f.lap == st.lap],
        }

    def handle_sample(self, msg: dict) -> list[dict]:
        """Engine step for one sample message; returns outbound messages."""
        try:
            sample = BehaviorSample(
                t=float(msg["t"]),
                screen_angle=float(msg["angle"]),
                user_distance=_opt_float(msg.get("distance")),
                user_bearing=_opt_float(msg.get("bearing")),
                user_facing=_opt_float(msg.get("facing")),
                user_id=msg.get("user_id"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            return [{"type": "error", "code": "BadSample", "message": str(exc)}]
        self.last_user_id = sample.user_id
        self.last_sample_wall = time.monotonic()
        try:
            self.state, directives = self.engine.step(self.state, sample)
        except NonMonotonicTimeError as exc:
            return [{"type": "error", "code": "NonMonotonicTime", "message": str(exc)}]
        out = [{"type": "directive", **directive_wire(d)} for d in directives]
        out.append(self.state_msg())
        return out

    def handle_message(self, msg: dict) -> list[dict]:
        """Route one post-hello client message; raises ProtocolViolation to close."""
        kind = msg.get("type")
        if kind == "sample":
            return self.handle_sample(msg)
        if kind == "reset":
            self.state = self.engine.init()
            self.last_user_id = None
            return [self.state_msg()]
        if kind == "hello":
            raise ProtocolViolation("DuplicateHello", "session already established")
        raise ProtocolViolation("UnknownType", f"unknown message type {kind!r}")

    def check_client_seq(self, msg: dict) -> None:
        seq = msg.get("seq")
        if not isinstance(seq, int) or seq != self.seq_in + 1:
            raise ProtocolViolation(
                "BadSequence", f"expected client seq {self.seq_in + 1}, got {seq!r}")
        self.seq_in = seq


def _opt_float(value) -> float | None:
    return None if value is None else float(value)


class _Connection:
    """Binds a Session to a live WebSocket with gap-free outbound sequencing."""

    def __init__(self, ws: WebSocket, session: Session, config: EngineConfig):
        self.ws = ws
        self.session = session
        self.config = config
        self._send_lock = asyncio.Lock()
        self.closing = False

    async def send(self, msg: dict) -> None:
        async with self._send_lock:
            self.session.seq_out += 1
            msg = {"seq": self.session.seq_out, **msg}
            await self.ws.send_text(json.dumps(msg, separators=(",", ":")))

    async def recv(self) -> dict:
        text = await self.ws.receive_text()
        try:
            msg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProtocolViolation("BadJson", f"frame is not valid JSON: {exc}")
        if not isinstance(msg, dict):
            raise ProtocolViolation("BadJson", "frame must be a JSON object")
        return msg

    async def fail(self, code: str, message: str, close: bool) -> None:
        try:
            await self.send({"type": "error", "code": code, "message": message})
        except Exception:
            pass
        if close:
            try:
                await self.ws.close(code=1008)
            except Exception:
                pass

    async def heartbeat_loop(self) -> None:
        try:
            while True:
                await asyncio.sleep(self.config.heartbeat_s)
                idle = time.monotonic() - self.session.last_sample_wall
                if idle > self.config.idle_timeout_s:
                    await self.fail("IdleTimeout",
                                    f"no samples for {idle:.0f} s", close=True)
                    return
                await self.send({"type": "heartbeat", "t_wall": time.time()})
        except asyncio.CancelledError:
            pass
        except Exception:
            pass

    async def run(self) -> None:
        hello = await self.recv()
        self.session.check_client_seq(hello)
        if hello.get("type") != "hello":
            raise ProtocolViolation("HelloRequired", "first message must be hello")
        if hello.get("v") not in (None, PROTOCOL_VERSION):
            raise ProtocolViolation(
                "BadVersion", f"server speaks {PROTOCOL_VERSION}")
        wanted = hello.get("script")
        if wanted not in (None, self.session.script_name):
            raise ProtocolViolation("UnknownScript",
                                    f"server is running {self.session.script_name!r}")
        await self.send(self.session.welcome_msg())
        beat = asyncio.create_task(self.heartbeat_loop())
        try:
            while True:
                msg = await self.recv()
                self.session.check_client_seq(msg)
                for out in self.session.handle_message(msg):
                    await self.send(out)
        finally:
            beat.cancel()


def create_app(graph: StoryGraph, config: EngineConfig | None = None,
               script_hash: str = "-") -> FastAPI:
    config = config or EngineConfig()
    engine = Engine(graph, config)
    app = FastAPI(title="lifeloop bridge", version=PROTOCOL_VERSION)
    app.state.connections = set()
    app.state.graph = graph
    app.state.config = config

    @app.get("/")
    async def info():
        return {
            "protocol": PROTOCOL_VERSION,
            "script": graph.name,
            "script_hash": script_hash,
            "endpoint": "/ws",
            "sessions": len(app.state.connections),
        }

    @app.post("/admin/close-sessions")
    async def close_sessions():
        count = await shutdown_sessions(app)
        return {"closed": count}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session = Session(engine=engine, script_name=graph.name,
                          script_hash=script_hash)
        conn = _Connection(ws, session, config)
        app.state.connections.add(conn)
        try:
            await conn.run()
        except ProtocolViolation as exc:
            await conn.fail(exc.code, exc.message, close=True)
        except WebSocketDisconnect:
            pass
        finally:
            app.state.connections.discard(conn)

    return app


async def shutdown_sessions(app: FastAPI) -> int:
    """Flush a final state message to every live session and close it."""
    conns = list(app.state.connections)
    for conn in conns:
        try:
            closing = conn.session.state_msg()
            closing["closing"] = True
            await conn.send(closing)
        except Exception:
            pass
        try:
            await conn.ws.close(code=1001)
        except Exception:
            pass
        app.state.connections.discard(conn)
    return len(conns)


def serve(graph: StoryGraph, config: EngineConfig | None = None,
          host: str = "127.0.0.1", port: int = DEFAULT_PORT,
          script_hash: str = "-") -> None:
    """Run the service until interrupted (BindFailure surfaces from the loop)."""
    import uvicorn

    app = create_app(graph, config, script_hash=script_hash)
    uvicorn.run(app, host=host, port=port, log_level="warning")
