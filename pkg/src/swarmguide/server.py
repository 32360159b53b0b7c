"""Real-time session server: paces the world at the sim rate and bridges it
to operator clients over JSON text frames on a WebSocket.

Wire protocol (one JSON object per frame):

  client -> server
    {"type": "hand_pose", "t_client": <s>, "x": <m>, "y": <m>}
    {"type": "control", "action": "start" | "pause" | "reset"}
    {"type": "control", "action": "set_mode", "mode": "visual" | "blind"}
    {"type": "control", "action": "load_scenario", "name": <preset>}

  server -> client
    {"type": "state", "tick", "t_sim", "mode", "hand": [x, y],
     "active_pattern", "events": [{tick, kind, data}...],
     ... visual mode only: "drones": [{id, x, y, gx, gy}...],
     "centroid": [x, y], "formation_label",
     "obstacles": [{id, x, y, radius, influence}...],
     "links": [[source, target]...]}
    {"type": "pattern", "id", "timeline"}      (once, at pattern start)
    {"type": "metrics_summary", "metrics"}     (once, on finish)
    {"type": "heartbeat", "t_sim", "running", "overruns", "dropped_frames"}
    {"type": "error", "code", "detail"}

Semantics:
  - Hand input is last-writer-wins: each tick consumes the newest pose and
    older unconsumed samples vanish, like a motion-capture stream. The
    estimator is fed sim-tick time, never t_client, so a live session and a
    headless replay of its logged hand column produce identical physics.
  - State frames go out every `decimation`-th tick (default 2 = 30 Hz);
    events from skipped ticks ride along on the next frame.
  - Blind mode withholds drone/obstacle/centroid data on the server so the
    operator genuinely cannot see the swarm; pattern frames and the hand
    echo keep flowing.
  - A slow client never stalls the loop: outbound frames queue per client
    and overflow drops the frame, counted in `dropped_frames`.
  - Pacing overruns never warp time: missed deadlines increment `overruns`
    and the schedule resyncs to the wall clock.
  - Malformed or unknown frames are answered with an error frame, never
    dropped silently. A fully disconnected server pauses the run.
"""

from __future__ import annotations

import asyncio
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .metrics import compute_run_metrics
from .scenario import PRESET_NAMES, Scenario, load_preset
from .sim import World
from .tactile import encode_pattern, pattern_to_json
from .traces import TraceEvent

DEFAULT_PORT = 8765
DEFAULT_DECIMATION = 2
HEARTBEAT_S = 1.0
CLIENT_QUEUE_LIMIT = 32

MODES = ("visual", "blind")


@dataclass(eq=False)  # identity semantics: clients live in a set
class _Client:
    queue: asyncio.Queue
    drops: int = 0


@dataclass
class HandSlot:
    """Latest-pose mailbox with mocap semantics (last writer wins)."""

    pose: Optional[tuple] = None
    received: int = 0

    def offer(self, x: float, y: float):
        self.pose = (x, y)
        self.received += 1

    def consume(self, fallback: tuple) -> tuple:
        if self.pose is None:
            return fallback
        return (self.pose[0], self.pose[1], fallback[2])


def state_frame(world: World, mode: str, pending_events: list[TraceEvent]) -> dict:
    """Builds the state frame for the current tick; blind mode is applied
    here, server-side, so withheld data never reaches the wire."""
    row = world.trace.rows[-1]
    frame = {
        "type": "state",
        "tick": row.tick,
        "t_sim": row.t,
        "mode": mode,
        "hand": [row.hand[0], row.hand[1]],
        "active_pattern": row.pattern_id or None,
        "events": [
            {"tick": e.tick, "kind": e.kind, "data": e.data} for e in pending_events
        ],
    }
    if mode == "blind":
        return frame
    centroid = row.positions.mean(axis=0)
    frame["drones"] = [
        {
            "id": i,
            "x": row.positions[i, 0],
            "y": row.positions[i, 1],
            "gx": row.goals[i, 0],
            "gy": row.goals[i, 1],
        }
        for i in range(row.positions.shape[0])
    ]
    frame["centroid"] = [centroid[0], centroid[1]]
    frame["formation_label"] = row.label
    frame["obstacles"] = [
        {
            "id": o.id,
            "x": o.center[0],
            "y": o.center[1],
            "radius": o.radius,
            "influence": o.influence,
        }
        for o in world.scenario.obstacles
    ]
    frame["links"] = [[l.source, l.target] for l in world.spec.links]
    return frame


def error_frame(code: str, detail: str) -> dict:
    return {"type": "error", "code": code, "detail": detail}


def missed_deadlines(now: float, deadline: float, sample_time: float) -> int:
    """How many whole ticks the loop is behind schedule (0 when on time)."""
    if now <= deadline:
        return 0
    return int((now - deadline) / sample_time) + 1


class SessionServer:
    """One scenario, one world, any number of observing/steering clients."""

    def __init__(self, scenario: Scenario, host: str = "127.0.0.1",
                 port: int = DEFAULT_PORT, mode: str = "visual",
                 decimation: int = DEFAULT_DECIMATION, pacing: bool = True,
                 max_ticks: Optional[int] = None, heartbeat_s: float = HEARTBEAT_S):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if decimation < 1:
            raise ValueError(f"decimation must be >= 1, got {decimation}")
        self.scenario = scenario
        self.host = host
        self.port = port
        self.mode = mode
        self.decimation = decimation
        self.pacing = pacing
        self.max_ticks = max_ticks
        self.heartbeat_s = heartbeat_s

        self.world = World(scenario)
        self.hand = HandSlot()
        self.running = False
        self.overruns = 0
        self.clients: set[_Client] = set()
        self.tick_limit_reached = asyncio.Event()
        self._pending_events: list[TraceEvent] = []
        self._metrics_sent = False
        self._closing = False
        self._server = None

    # -- synchronous core (unit-testable without any network) ---------------

    def handle_frame(self, raw: str, client: Optional[_Client] = None):
        """Parses and applies one client frame; answers errors in kind."""
        try:
            message = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._answer(client, error_frame("malformed", "frame is not valid JSON"))
            return
        if not isinstance(message, dict) or "type" not in message:
            self._answer(client, error_frame("malformed", "frame must be an object with a 'type'"))
            return
        kind = message["type"]
        if kind == "hand_pose":
            self._on_hand_pose(message, client)
        elif kind == "control":
            self._on_control(message, client)
        else:
            self._answer(client, error_frame("unknown_type", f"unknown message type {kind!r}"))

    def _on_hand_pose(self, message: dict, client: Optional[_Client]):
        x, y = message.get("x"), message.get("y")
        ok = (isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)
              and isinstance(y, (int, float)) and not isinstance(y, bool) and math.isfinite(y))
        if not ok:
            self._answer(client, error_frame("malformed", "hand_pose needs finite numeric x and y"))
            return
        self.hand.offer(float(x), float(y))

    def _on_control(self, message: dict, client: Optional[_Client]):
        action = message.get("action")
        if action == "start":
            self.running = True
        elif action == "pause":
            self.running = False
        elif action == "reset":
            self._reset(self.scenario)
        elif action == "set_mode":
            mode = message.get("mode")
            if mode not in MODES:
                self._answer(client, error_frame("bad_mode", f"mode must be one of {MODES}"))
                return
            self.mode = mode
        elif action == "load_scenario":
            name = message.get("name")
            if name not in PRESET_NAMES:
                self._answer(client, error_frame(
                    "unknown_scenario", f"no preset named {name!r}; shipped: {list(PRESET_NAMES)}"))
                return
            scenario = load_preset(name)
            self.scenario = scenario
            self._reset(scenario)
        else:
            self._answer(client, error_frame("unknown_action", f"unknown control action {action!r}"))

    def _reset(self, scenario: Scenario):
        self.world = World(scenario)
        self.hand = HandSlot()
        self.running = False
        self._pending_events = []
        self._metrics_sent = False
        self.tick_limit_reached = asyncio.Event()

    def tick_once(self):
        """One paced step: consume the hand slot, advance, maybe broadcast."""
        pose = self.hand.consume(tuple(self.scenario.start_hand))
        _, events = self.world.step(pose)
        self._pending_events.extend(events)

        for event in events:
            if event.kind == "pattern_start":
                timeline = json.loads(pattern_to_json(encode_pattern(event.data["pattern"])))
                self.broadcast({"type": "pattern", "id": event.data["pattern"],
                                "timeline": timeline})

        tick = self.world.trace.rows[-1].tick
        if tick % self.decimation == 0:
            self.broadcast(state_frame(self.world, self.mode, self._pending_events))
            self._pending_events = []

        if self.world.finished and not self._metrics_sent:
            self._metrics_sent = True
            metrics = compute_run_metrics(self.world.trace)
            self.broadcast({"type": "metrics_summary", "metrics": json.loads(metrics.to_json())})

        if self.max_ticks is not None and self.world.tick >= self.max_ticks:
            self.running = False
            self.tick_limit_reached.set()

    def broadcast(self, frame: dict):
        text = json.dumps(frame)
        for client in self.clients:
            self._enqueue(client, text)

    def _answer(self, client: Optional[_Client], frame: dict):
        if client is None:
            return
        self._enqueue(client, json.dumps(frame))

    def _enqueue(self, client: _Client, text: str):
        try:
            client.queue.put_nowait(text)
        except asyncio.QueueFull:
            client.drops += 1  # backpressure: drop, count, never stall

    @property
    def dropped_frames(self) -> int:
        return sum(c.drops for c in self.clients)

    def heartbeat_frame(self) -> dict:
        return {
            "type": "heartbeat",
            "t_sim": self.world.t_sim,
            "running": self.running,
            "overruns": self.overruns,
            "dropped_frames": self.dropped_frames,
        }

    # -- asyncio plumbing ----------------------------------------------------

    async def _writer(self, websocket, client: _Client):
        while True:
            text = await client.queue.get()
            await websocket.send(text)

    async def _handler(self, websocket):
        client = _Client(queue=asyncio.Queue(maxsize=CLIENT_QUEUE_LIMIT))
        self.clients.add(client)
        writer = asyncio.create_task(self._writer(websocket, client))
        try:
            async for raw in websocket:
                self.handle_frame(raw, client)
        except Exception:
            pass  # connection teardown is handled below either way
        finally:
            writer.cancel()
            self.clients.discard(client)
            if not self.clients:
                self.running = False  # nobody steering: pause, don't drift

    async def _heartbeat_loop(self):
        while not self._closing:
            await asyncio.sleep(self.heartbeat_s)
            self.broadcast(self.heartbeat_frame())

    async def _sim_loop(self):
        loop = asyncio.get_running_loop()
        period = self.world.sample_time
        deadline = loop.time() + period
        while not self._closing:
            if self.running:
                self.tick_once()
            if not self.pacing:
                await asyncio.sleep(0)
                continue
            now = loop.time()
            if not self.running:
                deadline = now + period  # a paused loop owes no deadlines
                await asyncio.sleep(period)
                continue
            missed = missed_deadlines(now, deadline, period)
            if missed:
                self.overruns += missed
                deadline = now + period  # resync; sim time is not warped
                await asyncio.sleep(0)
            else:
                await asyncio.sleep(max(0.0, deadline - now))
                deadline += period

    async def serve(self):
        """Runs until cancelled; binds the port before returning control."""
        import websockets

        self._server = await websockets.serve(self._handler, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        tasks = [asyncio.create_task(self._sim_loop()),
                 asyncio.create_task(self._heartbeat_loop())]
        try:
            await asyncio.Future()
        except asyncio.CancelledError:
            pass
        finally:
            self._closing = True
            for task in tasks:
                task.cancel()
            self._server.close()
            await self._server.wait_closed()


def run_session(scenario: Scenario, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                mode: str = "visual", decimation: int = DEFAULT_DECIMATION):
    """Blocking entry point: serve one scenario until interrupted."""
    server = SessionServer(scenario, host=host, port=port, mode=mode,
                           decimation=decimation)

    async def _main():
        await server.serve()

    try:
        asyncio.run(_main())
    except KeyboardInterrupt:
        pass
    return server
