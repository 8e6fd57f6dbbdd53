"""Live teleoperation service: a 120 Hz session loop fed by a last-writer-wins
command mailbox, a 20 Hz state stream over WebSocket, and session recording in
the identification pipeline's log format.

Rotations travel the wire as unit quaternions and are converted to matrices at
this boundary; everything inside stays a rotation matrix.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .errors import IOFailure
from .scenario import ScenarioConfig, SimulationEngine
from .operators import K_OMEGA_DEFAULT, teleop_command_map
from .sysid import SessionLog

log = logging.getLogger(__name__)

COMMAND_HOLD_S = 0.25  # commands older than this are treated as zero
STREAM_DIVISOR = 6  # 120 Hz sim -> 20 Hz state stream
MAX_CATCHUP_TICKS = 5

_schema_text = resources.files("so3nav").joinpath("wire_messages.schema.json").read_text()
WIRE_SCHEMA = json.loads(_schema_text)


def validate_message(msg: dict) -> None:
    import jsonschema

    jsonschema.validate(msg, WIRE_SCHEMA)


def quat_from_rotation(r) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0."""
    r = np.asarray(r, dtype=float)
    tr = np.trace(r)
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s])
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array([(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s])
    elif r[1, 1] > r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array([(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array([(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s])
    q = q / np.linalg.norm(q)
    return -q if q[0] < 0 else q


def rotation_from_quat(q) -> np.ndarray:
    """Rotation matrix from a (w, x, y, z) quaternion, unit within 1e-6."""
    q = np.asarray(q, dtype=float)
    nrm = np.linalg.norm(q)
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"quaternion norm {nrm} is not 1 within 1e-6")
    w, x, y, z = q / nrm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass
class Mailbox:
    """Single-slot command mailbox; the tick loop reads, handlers overwrite."""

    seq: int = -1
    omega_h_s: np.ndarray | None = None
    receipt_tick: int = -1

    def deposit(self, seq: int, omega_h_s, tick: int) -> bool:
        if seq <= self.seq:
            return False
        self.seq = seq
        self.omega_h_s = np.asarray(omega_h_s, dtype=float)
        self.receipt_tick = tick
        return True


class TeleopSession:
    """One live session wrapping the deterministic simulation engine.

    Ticks are driven either manually (tests, replay) or by the wall-clock loop
    in `run_clocked`. The zero-order hold expires after COMMAND_HOLD_S of
    session time without a fresh command.
    """

    def __init__(self, cfg: ScenarioConfig):
        if cfg.operator.kind != "live":
            from dataclasses import replace

            from .scenario import OperatorSpec

            log.info("teleop session forces the live operator; configured %r ignored", cfg.operator.kind)
            cfg = replace(cfg, operator=OperatorSpec(kind="live"))
        self.cfg = cfg
        self.engine = SimulationEngine(cfg)
        self.mailbox = Mailbox()
        self.hold_ticks = int(round(COMMAND_HOLD_S / cfg.dt))
        self.client_id: str | None = None
        self.grab_rotation: np.ndarray | None = None
        self.pose_seq = 0

    @property
    def tick_count(self) -> int:
        return self.engine.tick_index

    def applied_command(self) -> np.ndarray:
        box = self.mailbox
        if box.omega_h_s is None or (self.engine.tick_index - box.receipt_tick) > self.hold_ticks:
            return np.zeros(3)
        return box.omega_h_s

    def tick_once(self) -> None:
        self.engine.tick(omega_h_s_live=self.applied_command())

    def handle_message(self, msg: dict) -> None:
        validate_message(msg)
        kind = msg["type"]
        if kind == "command":
            self.mailbox.deposit(msg["seq"], msg["omega_h_s"], self.engine.tick_index)
        elif kind == "grab":
            self.grab_rotation = rotation_from_quat(msg["r0_quat"])
        elif kind == "pose":
            if self.grab_rotation is None:
                log.warning("pose message before grab; ignored")
                return
            cmd = teleop_command_map(rotation_from_quat(msg["rt_quat"]), self.grab_rotation, K_OMEGA_DEFAULT)
            self.pose_seq += 1
            self.mailbox.deposit(self.mailbox.seq + 1, cmd, self.engine.tick_index)
        elif kind == "press_start":
            self.engine.press_start()
        elif kind == "set_reference":
            self.engine.set_reference(msg["d_r"])
        else:  # pragma: no cover - schema forbids this
            raise ValueError(f"unhandled message type {kind}")

    def state_message(self) -> dict:
        eng = self.engine
        err = float(np.linalg.norm(eng.net.d_bar - eng.reference.d_r))
        return {
            "v": 1,
            "type": "state",
            "t": eng.t,
            "d_l": [float(x) for x in eng.leader.d_l],
            "d_r": [float(x) for x in eng.reference.d_r],
            "d_bar": [float(x) for x in eng.net.d_bar],
            "R_l_quat": [float(x) for x in quat_from_rotation(eng.leader.rotation)],
            "bodies_quat": [[float(x) for x in quat_from_rotation(r)] for r in eng.net.rotations],
            "error_norm": err,
            "trial_id": int(eng.trial_id),
        }

    async def run_clocked(self, stop: asyncio.Event, on_stream=None) -> None:
        """Wall-clock-locked loop: fixed dt, catch-up bounded at
        MAX_CATCHUP_TICKS, further backlog dropped with a gap marker."""
        dt = self.cfg.dt
        next_time = time.monotonic()
        while not stop.is_set():
            now = time.monotonic()
            behind = int((now - next_time) / dt)
            if behind > MAX_CATCHUP_TICKS:
                skipped = behind - MAX_CATCHUP_TICKS
                next_time += skipped * dt
                self.engine.gap_before_next = True
                log.warning("dropped %d ticks to stay real-time", skipped)
            if now < next_time:
                await asyncio.sleep(next_time - now)
            self.tick_once()
            next_time += dt
            if on_stream is not None and self.tick_count % STREAM_DIVISOR == 0:
                await on_stream(self.state_message())


def export_session(session: TeleopSession, path) -> SessionLog:
    """Write the session recording as an identification-ready CSV log."""
    rec = session.engine.record()
    if rec.n_ticks < 1:
        raise IOFailure("session has no ticks to export")
    data = rec.data
    session_log = SessionLog(
        t=data["t"],
        error_e=np.column_stack([data["e1"], data["e2"]]),
        u_h=np.column_stack([data["u1"], data["u2"]]),
        omega_h_s=session_log_vec(data, "whs"),
        r_l=_flat(rec, "Rl"),
        r_bar=_flat(rec, "Rbar"),
        r_r=_flat(rec, "Rr"),
        d_r=session_log_vec(data, "dr"),
        trial_id=data["trial_id"].astype(int),
        start_pressed=data["start_pressed"] > 0.5,
        rate_hz=1.0 / session.cfg.dt,
    )
    try:
        session_log.save_csv(path)
    except OSError as exc:
        raise IOFailure(f"could not write session log: {exc}") from exc
    return session_log


def session_log_vec(data: dict, prefix: str) -> np.ndarray:
    return np.column_stack([data[f"{prefix}_x"], data[f"{prefix}_y"], data[f"{prefix}_z"]])


def _flat(rec, prefix: str) -> np.ndarray:
    return np.column_stack([rec.data[f"{prefix}_{i}{j}"] for i in range(3) for j in range(3)])


def create_app(
    cfg: ScenarioConfig,
    record_dir: str | None = None,
    auto_tick: bool = True,
    static_dir: str | None = None,
) -> FastAPI:
    """FastAPI app hosting one session: WS /session, GET /health, GET /config,
    and optionally the browser client as static files at /."""
    session = TeleopSession(cfg)

    @asynccontextmanager
    async def lifespan(app_):
        if auto_tick:
            app_.state.tick_task = asyncio.create_task(session.run_clocked(app_.state.stop))
        yield
        app_.state.stop.set()
        if app_.state.tick_task is not None:
            app_.state.tick_task.cancel()
        if record_dir is not None and session.tick_count > 0:
            out = Path(record_dir) / f"session_{int(time.time())}.csv"
            out.parent.mkdir(parents=True, exist_ok=True)
            export_session(session, out)
            log.info("session log written to %s", out)

    app = FastAPI(title="so3nav teleop service", lifespan=lifespan)
    app.state.session = session
    app.state.stop = asyncio.Event()
    app.state.tick_task = None

    @app.get("/health")
    async def health():
        return {"status": "ok", "tick_rate": 1.0 / cfg.dt, "ticks": session.tick_count}

    @app.get("/config")
    async def config():
        return cfg.to_dict()

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    @app.websocket("/session")
    async def ws_session(ws: WebSocket):
        await ws.accept()
        if session.client_id is not None:
            await ws.close(code=4000, reason="session already has a controlling client")
            return
        session.client_id = f"client-{id(ws)}"
        last_streamed = -1
        try:
            while True:
                try:
                    raw = await asyncio.wait_for(ws.receive_text(), timeout=cfg.dt)
                    msg = json.loads(raw)
                    session.handle_message(msg)
                except asyncio.TimeoutError:
                    pass
                tick = session.tick_count
                if tick // STREAM_DIVISOR > last_streamed // STREAM_DIVISOR or last_streamed < 0:
                    last_streamed = tick
                    await ws.send_text(json.dumps(session.state_message()))
        except WebSocketDisconnect:
            session.client_id = None

    return app
