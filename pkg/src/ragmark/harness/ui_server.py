"""Browser bridge: FastAPI app exposing the UI socket protocol.

The policy runs server-side from a checkpoint; the browser only sends
goal commands and renders the frame stream.  The scene free-runs at the
decision rate while at least one client is attached and pauses within
one decision step of the last disconnect.
"""

from __future__ import annotations

import asyncio
import logging
import time
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..envs import make_env
from ..ppo.checkpoint import PolicyParams, load_checkpoint
from ..tasks.base import CompositeWrapper
from ..tasks.controller import ControllerGoal, ControllerWrapper, DISCRETE_GOALS
from ..vec import VecScene
from .protocol import frame_msg, spec_reply

log = logging.getLogger(__name__)


class UiStatus(BaseModel):
    env: str
    clients: int
    running: bool
    sim_time: float
    frames_sent: int


class UiSession:
    """Single-agent scene driven by the checkpoint policy."""

    def __init__(self, params: PolicyParams, deterministic: bool = True):
        wrappers = params.wrappers or ["controller:discrete"]
        spec = make_env(params.env_id)
        self.scene = VecScene(spec, n=1, decision_frequency=5, seed=0,
                              wrapper=list(wrappers))
        if self.scene.obs_dim != params.obs_dim:
            raise ValueError(
                f"checkpoint expects obs_dim {params.obs_dim}, scene built "
                f"{self.scene.obs_dim}; wrappers {wrappers}")
        self.params = params
        self.deterministic = deterministic
        self.gen = torch.Generator().manual_seed(0)
        self.obs = self.scene.vec_reset(seed=0).obs
        self.last_reward = 0.0
        self.frames_sent = 0
        self._geoms = spec.cm.geom_table()
        controller = self.scene.wrapper
        if isinstance(controller, CompositeWrapper):
            controller = controller.find(ControllerWrapper)
        self.controller = controller if isinstance(controller, ControllerWrapper) else None
        if self.controller is not None:
            self.controller.set_goal(0, ControllerGoal(mode="discrete",
                                                       discrete_goal="stationary"))
            self.obs = self.scene.vec_reset(seed=0).obs

    @property
    def decision_dt(self) -> float:
        return self.scene.decision_dt

    def set_goal(self, value) -> str | None:
        if self.controller is None:
            return "session has no controller wrapper"
        if isinstance(value, str):
            if value not in DISCRETE_GOALS:
                return f"unknown goal {value!r}"
            self.controller.set_goal(0, ControllerGoal(mode="discrete",
                                                       discrete_goal=value))
            return None
        try:
            v = float(value)
        except (TypeError, ValueError):
            return f"bad goal value {value!r}"
        if not (-1.0 <= v <= 1.0):
            return "goal velocity must be in [-1, 1]"
        self.controller.set_goal(0, ControllerGoal(mode="continuous",
                                                   target_velocity=v))
        return None

    def step(self) -> dict:
        norm = self.params.normalizer.normalize(self.obs)
        with torch.no_grad():
            actions, _, _ = self.params.net.act(
                torch.from_numpy(norm).to(torch.float32), generator=self.gen,
                deterministic=self.deterministic)
        tr = self.scene.vec_step(actions.numpy().astype(np.float64))
        self.obs = tr.obs
        self.last_reward = float(tr.rewards[0])
        return self.frame()

    def frame(self) -> dict:
        batch = self.scene.batch
        cm = self.scene.spec.cm
        from ..physics.compiled import _quat_mul, _quat_rotate
        bodies = []
        for gid, g in enumerate(self._geoms):
            b = g["body"]
            bp = batch.pos[0, b]
            bq = batch.quat[0, b]
            wp = bp + _quat_rotate(bq, np.array(g["pos"]))
            wq = _quat_mul(bq, np.array(g["quat"]))
            bodies.append({
                "id": gid,
                "pos": [float(v) for v in wp],
                "quat": [float(v) for v in wq],
                "shape": g["shape"],
                "size": [float(v) for v in g["size"]],
            })
        goal = ""
        if self.controller is not None:
            g = self.controller.goals.get(0)
            if g is not None:
                goal = g.discrete_goal if g.mode == "discrete" else f"{g.target_velocity:+.2f}"
        hud = {
            "reward": self.last_reward,
            "vx": self.scene.instances[0].pelvis_velocity_x(),
            "goal": goal,
        }
        self.frames_sent += 1
        return frame_msg(float(batch.time[0]), bodies, hud)

    def spec_message(self) -> dict:
        terrain = self.scene.batch.terrains[0]
        cm = self.scene.spec.cm
        pelvis_geom = next((gid for gid, g in enumerate(self._geoms)
                            if g["body"] == cm.pelvis_index), 0)
        return spec_reply(
            self.scene.obs_dim, self.scene.act_dim, 1,
            env=self.scene.spec.env_id,
            terrain=[[float(x), float(y)] for x, y in terrain.polyline()],
            decision_dt=self.decision_dt,
            pelvis_geom=pelvis_geom,
        )


def build_app(ckpt_path: str | Path, static_dir: str | Path | None = None,
              deterministic: bool = True, realtime: bool = True) -> FastAPI:
    params = load_checkpoint(ckpt_path)
    app = FastAPI(title="ragmark controller ui", version="1.0")
    session = UiSession(params, deterministic=deterministic)
    clients: set[WebSocket] = set()
    loop_task: asyncio.Task | None = None
    app.state.session = session

    async def free_run() -> None:
        # steps only while a client is attached; pauses within one
        # decision step of the last disconnect
        period = session.decision_dt
        next_t = time.perf_counter()
        while clients:
            frame = await asyncio.get_running_loop().run_in_executor(None, session.step)
            dead = []
            for ws in list(clients):
                try:
                    await ws.send_json(frame)
                except Exception:
                    dead.append(ws)
            for ws in dead:
                clients.discard(ws)
            if realtime:
                next_t += period
                delay = next_t - time.perf_counter()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_t = time.perf_counter()
            else:
                await asyncio.sleep(0)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        nonlocal loop_task
        await ws.accept()
        await ws.send_json(session.spec_message())
        clients.add(ws)
        if loop_task is None or loop_task.done():
            loop_task = asyncio.create_task(free_run())
        try:
            while True:
                data = await ws.receive_json()
                if not isinstance(data, dict) or data.get("cmd") != "goal":
                    await ws.send_json({"type": "error", "code": "bad_json",
                                        "msg": "expected {'cmd':'goal','value':...}"})
                    continue
                err = session.set_goal(data.get("value"))
                if err is not None:
                    await ws.send_json({"type": "error", "code": "bad_shape",
                                        "msg": err})
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(ws)

    @app.get("/status", response_model=UiStatus)
    def status() -> UiStatus:
        return UiStatus(
            env=session.scene.spec.env_id, clients=len(clients),
            running=bool(clients), sim_time=float(session.scene.batch.time[0]),
            frames_sent=session.frames_sent)

    static = Path(static_dir) if static_dir else _default_static_dir()
    if static is not None and static.is_dir():
        app.mount("/", StaticFiles(directory=static, html=True), name="ui")
    else:
        @app.get("/")
        def index() -> HTMLResponse:
            return HTMLResponse(
                "<h1>ragmark</h1><p>UI assets not found; connect to /ws "
                "directly or build the frontend.</p>")
    return app


def _default_static_dir() -> Path | None:
    here = Path(__file__).resolve()
    for base in here.parents:
        cand = base / "frontend" / "dist"
        if cand.is_dir():
            return cand
    return None


def run_ui_server(ckpt_path: str, host: str, port: int,
                  static_dir: str | None = None) -> None:
    import uvicorn
    app = build_app(ckpt_path, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
