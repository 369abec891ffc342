"""WebSocket session service exposing the engine to the operator console.

The engine publishes decimated state snapshots and accepts input events
(target drags, grasp level, controller/delay toggles, pause/reset). Inputs
coalesce latest-wins per kind and apply at the next tick boundary. Two
drive modes: `realtime` paces itself near wall-clock; `lockstep` advances
only on explicit client `advance` messages, which makes integration tests
and UI replays deterministic.
"""

from __future__ import annotations

import asyncio
import contextlib
import dataclasses
import json

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import ConfigError, ScenarioConfig, preset
from .engine import Engine, EngineDivergence
from .operators import build_operator

SNAPSHOT_DECIMATION = 16

_INPUT_KINDS = (
    "target_move", "grasp", "toggle_controller", "set_delay",
    "scene", "pause", "resume", "reset", "advance",
)


class UiOperator:
    """Operator model whose target is steered by the UI instead of a script."""

    def __init__(self, config: ScenarioConfig):
        scripted = build_operator(config)
        self.arm_l1 = scripted.arm_l1
        self.arm_l2 = scripted.arm_l2
        self.target = np.zeros(3)
        self.grasp_level = 0.0

    def trajectory(self, t: float):
        return self.target.copy(), np.zeros(3)

    def grasp(self, t: float) -> float:
        return self.grasp_level


def _interactive_config(config: ScenarioConfig) -> ScenarioConfig:
    return dataclasses.replace(config, gain_schedule="grasp", grasp_driven=True)


class Session:
    """One engine plus its pending-input buffer."""

    def __init__(self, config: ScenarioConfig):
        self.base_config = _interactive_config(config)
        self.paused = False
        self._build()

    def _build(self) -> None:
        self.operator = UiOperator(self.base_config)
        self.engine = Engine(self.base_config, operator=self.operator)

    def apply(self, event: dict) -> None:
        kind = event.get("kind")
        if kind not in _INPUT_KINDS:
            raise ValueError(f"unknown input kind {kind!r}")
        if kind == "target_move":
            self.operator.target = np.array(
                [float(event.get(ax, self.operator.target[i])) for i, ax in enumerate("xyz")]
            )
        elif kind == "grasp":
            value = float(event["value"])
            if not 0.0 <= value <= 20.0:
                raise ValueError("grasp must be in [0, 20] N")
            self.operator.grasp_level = value
        elif kind == "toggle_controller":
            controller = event["controller"]
            if controller not in ("tic", "iac", "high-gain"):
                raise ValueError(f"unknown controller {controller!r}")
            self.engine.controller = controller
        elif kind == "set_delay":
            delta = float(event["delta"])
            if delta < 0.0:
                raise ValueError("delta must be >= 0")
            self.engine.config = dataclasses.replace(self.engine.config, delta=delta)
            self.engine.line = type(self.engine.line)(delta=delta)
        elif kind == "scene":
            self.base_config = _interactive_config(preset(event["scenario"], self.base_config.controller))
            self.engine.close()
            self._build()
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "reset":
            self.engine.close()
            self._build()
            self.paused = False

    def snapshot(self, last_row: dict | None) -> dict:
        e = self.engine
        if last_row is None:
            ruptured = getattr(e.contact, "ruptured", False)
            return {
                "type": "snapshot", "tick": e.tick, "t": e.tick * e.config.dt,
                "x_l": list(e.leader.position), "x": list(e.follower.position),
                "tau": list(e.tau), "l1": list(e.limiter.l1),
                "f_env": [0.0, 0.0, 0.0], "error": float(
                    np.linalg.norm(e.follower.position - e.leader.position)),
                "controller": e.controller, "ruptured": bool(ruptured), "paused": self.paused,
            }
        return {
            "type": "snapshot", "tick": e.tick, "t": last_row["t"],
            "x_l": list(last_row["x_l"]), "x": list(last_row["x"]),
            "tau": list(last_row["tau"]), "l1": list(last_row["l1"]),
            "f_env": list(last_row["f_env"]), "error": last_row["error"],
            "controller": e.controller,
            "ruptured": bool(getattr(e.contact, "ruptured", False)),
            "paused": self.paused,
        }


def create_app(config: ScenarioConfig) -> FastAPI:
    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        if app.state.session is not None:
            app.state.session.engine.close()

    app = FastAPI(title="teleosim session", lifespan=lifespan)
    # one engine run per server: reconnecting clients resume the same run,
    # which only an explicit reset event restarts
    app.state.session = None

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        mode = ws.query_params.get("mode", "realtime")
        await ws.accept()
        if app.state.session is None:
            app.state.session = Session(config)
        session = app.state.session
        pending: dict[str, dict] = {}
        queue: asyncio.Queue = asyncio.Queue()

        async def receiver():
            while True:
                try:
                    text = await ws.receive_text()
                except WebSocketDisconnect:
                    await queue.put(None)
                    return
                await queue.put(text)

        def handle(text: str) -> dict | None:
            """Parse one client message; returns an advance request if any."""
            try:
                event = json.loads(text)
                kind = event.get("kind")
                if kind == "advance":
                    ticks = int(event.get("ticks", 1))
                    if ticks < 1:
                        raise ValueError("ticks must be >= 1")
                    return {"ticks": ticks}
                # coalesce latest-wins per kind, validate eagerly
                session.apply(event)
            except (ValueError, KeyError, TypeError) as exc:
                errors.append({"type": "error", "message": str(exc)})
            return None

        errors: list[dict] = []

        async def flush_errors():
            while errors:
                await ws.send_text(json.dumps(errors.pop(0)))

        async def advance(ticks: int):
            last_row = None
            for i in range(ticks):
                try:
                    last_row = session.engine.step()
                except EngineDivergence as exc:
                    await ws.send_text(json.dumps({"type": "diverged", "message": str(exc)}))
                    return
                if (i + 1) % SNAPSHOT_DECIMATION == 0:
                    await ws.send_text(json.dumps(session.snapshot(last_row)))
            await ws.send_text(json.dumps(session.snapshot(last_row)))

        recv_task = asyncio.create_task(receiver())
        try:
            await ws.send_text(json.dumps(session.snapshot(None)))
            if mode == "lockstep":
                while True:
                    text = await queue.get()
                    if text is None:
                        return
                    req = handle(text)
                    await flush_errors()
                    if req is not None and not session.paused:
                        await advance(req["ticks"])
            else:
                dt = session.engine.config.dt
                while True:
                    while not queue.empty():
                        text = queue.get_nowait()
                        if text is None:
                            return
                        handle(text)
                    await flush_errors()
                    if not session.paused:
                        await advance(SNAPSHOT_DECIMATION)
                    await asyncio.sleep(dt * SNAPSHOT_DECIMATION)
        finally:
            recv_task.cancel()

    return app


def serve_session(config: ScenarioConfig, port: int) -> None:
    """Blocking uvicorn server for the operator console."""
    import uvicorn

    uvicorn.run(create_app(config), host="127.0.0.1", port=port, log_level="warning")
