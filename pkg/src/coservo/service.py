"""WebSocket streaming service around a single live simulation.

One process hosts one scenario. Clients connect to ``/ws`` and receive a
``hello`` frame followed by a stream of ``state`` frames; the first client
asking for the expert role may inject drag commands, move the Cartesian box,
and pause, resume, re-speed, or single-step the simulation. Everyone else is
a viewer. The frame vocabulary is frozen in PROTOCOL.md as protocol
``coservo.ws/1``; changing any field there is a breaking change.

Commands are queued and drained in arrival order once per simulation step,
so a command observed at step k takes effect at step k+1 at the latest.
Outbound frames go through bounded per-client queues; when a client cannot
keep up, the oldest queued frame is evicted so the newest state always gets
through. A client deep enough in backlog to lose a command reply has fallen
a full queue length behind and should reconnect.
"""

import asyncio
import contextlib
import json

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import ConfigError
from .kinematics import joint_world_positions
from .runlog import dumps_line
from .simulator import HumanEffortCommand, Simulation

PROTOCOL = "coservo.ws/1"
QUEUE_SIZE = 256

_CTL_ACTIONS = ("pause", "resume", "speed", "step")


def _frame(obj):
    """Canonical JSON encoding shared with the run log writer."""
    return dumps_line(obj)


class _Client:
    __slots__ = ("ws", "queue", "role")

    def __init__(self, ws, role):
        self.ws = ws
        self.role = role
        self.queue = asyncio.Queue(maxsize=QUEUE_SIZE)

    def push(self, text):
        """Enqueue a frame, evicting the oldest one when the client lags."""
        while True:
            try:
                self.queue.put_nowait(text)
                return
            except asyncio.QueueFull:
                try:
                    self.queue.get_nowait()
                except asyncio.QueueEmpty:
                    pass


class SimulationHub:
    """Owns the simulation loop and the connected WebSocket clients."""

    def __init__(self, config, realtime_factor=1.0, broadcast_every=10,
                 start_paused=False):
        if realtime_factor < 0:
            raise ValueError("realtime_factor must be >= 0 (0 = free run)")
        self.sim = Simulation(config)
        self.realtime_factor = float(realtime_factor)
        self.broadcast_every = max(1, int(broadcast_every))
        self.paused = bool(start_paused)
        self.clients = []
        self.expert = None
        self.commands = asyncio.Queue()
        self._wake = asyncio.Event()
        self._task = None
        self._force_broadcast = True
        self._pending_step = False

    # ------------------------------------------------------------------
    # frames

    def hello(self, role):
        sim = self.sim
        cfg = sim.cfg
        robot = cfg.robot
        doc = {
            "type": "hello",
            "protocol": PROTOCOL,
            "role": role,
            "header": sim.header(),
            "robot": {
                "n_dof": robot.n_dof,
                "task_dim": robot.task_dim,
                "joint_limits": robot.joint_limits,
                "axes": [j.axis for j in robot.joints],
                "offsets": [j.offset for j in robot.joints],
                "ee_offset": robot.ee_offset,
            },
            "camera": {
                "width": cfg.camera.width, "height": cfg.camera.height,
                "fx": cfg.camera.fx, "fy": cfg.camera.fy,
                "cx": cfg.camera.cx, "cy": cfg.camera.cy,
            },
            "vision": {"b": cfg.regions.vision.b, "k_v": cfg.regions.vision.k_v},
            "realtime_factor": self.realtime_factor,
            "paused": self.paused,
            "step": sim.k,
        }
        return doc

    def state_frame(self, rec=None):
        sim = self.sim
        doc = {
            "type": "state",
            "step": sim.k,
            "t": sim.t,
            "phase": sim.phase,
            "cycle": sim.cycle,
            "status": sim.status,
            "paused": self.paused,
            "q": sim.q,
            "joints": joint_world_positions(sim.cfg.robot, sim.q),
            "ee_t": sim._pose.r_t,
            "ee_quat": sim._pose.p,
            "px": sim._feature.x if sim._feature.visible else None,
            "target_px": sim._target.x if sim._target.visible else None,
            "pixel_error": sim.pixel_error(),
            "box": {"center": sim._box.r_c, "half_sizes": sim._box.c},
            "object": None if sim.task is None else sim.task.object_position,
            "drag": None if sim.live_drag is None else {
                "joint_index": sim.live_drag.joint_index,
                "drag": sim.live_drag.drag,
            },
        }
        if rec is not None:
            for key in ("u", "xi_q_norm", "xi_r_norm", "xi_x_norm",
                        "residual_norm", "V", "mode", "effort"):
                doc[key] = rec[key]
        return doc

    # ------------------------------------------------------------------
    # client management

    async def attach(self, ws, want_expert):
        role = "viewer"
        if want_expert and self.expert is None:
            role = "expert"
        client = _Client(ws, role)
        if role == "expert":
            self.expert = client
        self.clients.append(client)
        client.push(_frame(self.hello(role)))
        client.push(_frame(self.state_frame()))
        return client

    def detach(self, client):
        if client in self.clients:
            self.clients.remove(client)
        if self.expert is client:
            self.expert = None

    def _broadcast(self, doc):
        text = _frame(doc)
        for client in self.clients:
            client.push(text)

    # ------------------------------------------------------------------
    # command handling (runs inside the loop task, once per step)

    def _reply(self, client, doc):
        client.push(_frame(doc))

    def _apply_command(self, client, doc):
        seq = doc.get("seq")
        kind = doc.get("type")
        if kind not in ("drag", "region", "phase_ctl"):
            self._reply(client, {"type": "error", "seq": seq,
                                 "message": f"unknown frame type {kind!r}"})
            return
        if client.role != "expert":
            self._reply(client, {"type": "error", "seq": seq,
                                 "message": "expert role required"})
            return
        try:
            if kind == "drag":
                if doc.get("drag") is None:
                    self.sim.set_drag(None)
                else:
                    self.sim.set_drag(HumanEffortCommand(
                        joint_index=int(doc["joint_index"]),
                        drag=[float(v) for v in doc["drag"]]))
            elif kind == "region":
                self.sim.set_box(doc["center"], doc["half_sizes"])
            else:
                self._phase_ctl(doc)
        except (ConfigError, ValueError, KeyError, TypeError) as exc:
            self._reply(client, {"type": "error", "seq": seq, "message": str(exc)})
            return
        self._reply(client, {"type": "ack", "seq": seq, "cmd": kind,
                             "applied_step": self.sim.k})
        if self._pending_step:
            self._pending_step = False
            self._step_once()

    def _phase_ctl(self, doc):
        action = doc.get("action")
        if action not in _CTL_ACTIONS:
            raise ValueError(f"action must be one of {_CTL_ACTIONS}")
        if action == "pause":
            self.paused = True
        elif action == "resume":
            self.paused = False
            self._wake.set()
        elif action == "speed":
            value = float(doc["value"])
            if value < 0:
                raise ValueError("speed must be >= 0 (0 = free run)")
            self.realtime_factor = value
            self._wake.set()
        else:  # step
            if not self.paused:
                raise ValueError("step requires the simulation to be paused")
            self._pending_step = True

    def _drain_commands(self):
        while True:
            try:
                client, doc = self.commands.get_nowait()
            except asyncio.QueueEmpty:
                return
            self._apply_command(client, doc)

    # ------------------------------------------------------------------
    # simulation loop

    def _step_once(self):
        rec = self.sim.step()
        if rec is None:
            return
        due = self._force_broadcast or self.paused or \
            self.sim.k % self.broadcast_every == 0 or self.sim.status is not None
        if due:
            self._broadcast(self.state_frame(rec))
            self._force_broadcast = False
        if self.sim.status is not None:
            self._broadcast({"type": "summary", **self.sim.summary()})

    async def run(self):
        loop = asyncio.get_running_loop()
        anchor_wall = loop.time()
        elapsed = 0.0  # scheduled wall seconds since the anchor
        while True:
            self._drain_commands()
            if self.paused or self.sim.status is not None:
                self._wake.clear()
                waiter = asyncio.ensure_future(self.commands.get())
                wake = asyncio.ensure_future(self._wake.wait())
                done, pending = await asyncio.wait(
                    {waiter, wake}, return_when=asyncio.FIRST_COMPLETED)
                for fut in pending:
                    fut.cancel()
                    with contextlib.suppress(asyncio.CancelledError):
                        await fut
                if waiter in done:
                    client, doc = waiter.result()
                    self._apply_command(client, doc)
                anchor_wall, elapsed = loop.time(), 0.0
                continue
            self._step_once()
            if self.realtime_factor > 0:
                elapsed += self.sim.dt / self.realtime_factor
                delay = anchor_wall + elapsed - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                elif delay < -0.25:
                    # fell far behind wall time; rebase instead of sprinting
                    anchor_wall, elapsed = loop.time(), 0.0
            else:
                await asyncio.sleep(0)


async def _sender(client):
    while True:
        text = await client.queue.get()
        await client.ws.send_text(text)


def build_app(config, realtime_factor=1.0, broadcast_every=10, start_paused=False):
    """FastAPI application exposing the scenario over ``/ws``."""
    hub = SimulationHub(config, realtime_factor=realtime_factor,
                        broadcast_every=broadcast_every, start_paused=start_paused)

    @contextlib.asynccontextmanager
    async def _lifespan(app):
        hub._task = asyncio.ensure_future(hub.run())
        try:
            yield
        finally:
            hub._task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await hub._task
            hub._task = None

    app = FastAPI(lifespan=_lifespan)
    app.state.hub = hub

    @app.get("/health")
    async def _health():
        return {"protocol": PROTOCOL, "status": hub.sim.status,
                "step": hub.sim.k, "clients": len(hub.clients)}

    @app.websocket("/ws")
    async def _ws(ws: WebSocket):
        await ws.accept()
        want_expert = ws.query_params.get("role") == "expert"
        client = await hub.attach(ws, want_expert)
        sender = asyncio.ensure_future(_sender(client))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    doc = json.loads(text)
                    if not isinstance(doc, dict):
                        raise ValueError("frame must be a JSON object")
                except ValueError as exc:
                    hub._reply(client, {"type": "error", "seq": None,
                                        "message": f"bad frame: {exc}"})
                    continue
                await hub.commands.put((client, doc))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            hub.detach(client)

    return app
