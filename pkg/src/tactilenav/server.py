"""Live service mode: one real-time simulation loop behind a WebSocket.

A single Session task owns the engine and is the only thing that steps
or mutates it.  Connection handlers never touch the engine: control
messages travel in through one queue (each carrying a reply future for
the ack), and per-tick state frames travel out through one small queue
per client.  Outbound queues hold one frame and are overwritten, so a
slow client gets the newest state instead of building a backlog.
"""
from __future__ import annotations

import asyncio
import json
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .protocol import (
    ProtocolError,
    capture_state,
    scenario_info,
    snapshot_message,
    validate_control,
)
from .runner import ControlError, Engine
from .scenario import Scenario, ScenarioError, load_bundled, load_scenario
from .world import TeleopPolicy


class ControlFailure(Exception):
    """A well-formed control that cannot be honored right now."""


class Session:
    """Owns the engine and the loop; talk to it only through its queues."""

    def __init__(
        self,
        scenario: Scenario,
        start_paused: bool = False,
        log_path: str | None = None,
        realtime: bool = True,
    ):
        self.scenario = scenario
        self.start_paused = start_paused
        self.log_path = log_path
        self.realtime = realtime

        self.engine = Engine(scenario, log_path=log_path)
        self.dt = scenario.configs.sim.dt
        self.paused = start_paused
        self.info = scenario_info(scenario)
        self.gen = 0  # bumps on reset/load so clients re-keyframe

        self.controls: asyncio.Queue = asyncio.Queue()
        self.clients: dict[int, asyncio.Queue] = {}
        self._next_client = 0
        self._pending: list[dict] = []
        self._step_budget = 0
        self._last_frame = None
        self._last_sent = None
        self._task: asyncio.Task | None = None

    # -- lifecycle -------------------------------------------------------

    def start(self):
        self._task = asyncio.get_running_loop().create_task(self._loop())

    async def stop(self):
        if self._task:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
            self._task = None
        self.engine.close()

    def attach(self) -> tuple[int, asyncio.Queue]:
        cid = self._next_client
        self._next_client += 1
        q: asyncio.Queue = asyncio.Queue(maxsize=1)
        self.clients[cid] = q
        if self._last_frame is not None:
            q.put_nowait(self._last_frame)
        return cid, q

    def detach(self, cid: int):
        self.clients.pop(cid, None)

    # -- loop ------------------------------------------------------------

    async def _loop(self):
        # prime one tick so clients connect to a sensed, costed world
        self.engine.tick_once()
        self._broadcast()
        while True:
            while not self.controls.empty():
                self._handle(self.controls.get_nowait())
            if self.engine.report is not None:
                self.paused = True
                self._step_budget = 0
            if self.paused and self._step_budget == 0:
                self._broadcast_if_changed()
                self._handle(await self.controls.get())
                continue
            t0 = time.perf_counter()
            controls, self._pending = self._pending, []
            self.engine.tick_once(controls)
            self._broadcast()
            if self._step_budget > 0:
                self._step_budget -= 1
                await asyncio.sleep(0)  # let handlers ack between burst ticks
            elif self.realtime:
                await asyncio.sleep(max(0.0, self.dt - (time.perf_counter() - t0)))
            else:
                await asyncio.sleep(0)

    def _broadcast(self):
        state, cost = capture_state(self.engine, self.paused)
        self._last_frame = (self.gen, state, cost, self.info)
        self._last_sent = (self.gen, state["tick"], self.paused)
        for q in self.clients.values():
            if q.full():
                try:
                    q.get_nowait()
                except asyncio.QueueEmpty:
                    pass
            q.put_nowait(self._last_frame)

    def _broadcast_if_changed(self):
        now = (self.gen, self.engine.world.tick, self.paused)
        if now != self._last_sent:
            self._broadcast()

    # -- control application (loop side) ---------------------------------

    def _handle(self, envelope):
        msg, fut = envelope
        try:
            self._dispatch(msg)
        except ControlFailure as exc:
            fut.set_result((False, str(exc)))
        except (ScenarioError, ControlError, KeyError) as exc:
            fut.set_result((False, str(exc)))
        else:
            fut.set_result((True, ""))

    def _dispatch(self, msg: dict):
        kind = msg["kind"]
        finished = self.engine.report is not None
        meta = {k: v for k, v in msg.items() if k != "seq"}
        if kind == "pause":
            self.paused = True
            self.engine.log_meta(meta)
        elif kind == "resume":
            if finished:
                raise ControlFailure("run already finished; reset or load first")
            self.paused = False
            self.engine.log_meta(meta)
        elif kind == "step":
            if not self.paused:
                raise ControlFailure("step is only valid while paused")
            if finished:
                raise ControlFailure("run already finished; reset or load first")
            self._step_budget += 1
            self.engine.log_meta(meta)
        elif kind == "reset":
            self._swap(self.scenario)
            self.engine.log_meta(meta)
        elif kind == "load":
            self._swap(self._parse_load(msg))
            self.engine.log_meta(meta)
        else:  # teleop / touch
            if finished:
                raise ControlFailure("run already finished; reset or load first")
            if kind == "teleop":
                human = self.engine.world.human_by_id(str(msg["human"]))
                if not isinstance(human.policy, TeleopPolicy):
                    raise ControlFailure(f"human {human.id!r} is not teleoperated")
            self._pending.append(meta)

    def _parse_load(self, msg: dict) -> Scenario:
        source = msg["scenario"]
        if isinstance(source, str):
            # names resolve against the bundled set only; remote clients
            # get no filesystem access
            return load_bundled(source)
        return load_scenario(source)

    def _swap(self, scenario: Scenario):
        self.engine.close()
        self.scenario = scenario
        self.engine = Engine(scenario, log_path=self.log_path)
        self.dt = scenario.configs.sim.dt
        self.info = scenario_info(scenario)
        self.paused = self.start_paused
        self._pending = []
        self._step_budget = 0
        self.gen += 1
        self.engine.tick_once()
        self._broadcast()


# -- connection handling -------------------------------------------------


def _dump(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True)


async def _handle_text(ws, session: Session, text: str, out_seq: int, last_in):
    """Validate one inbound frame, run it, reply.  Returns (out_seq, last_in)."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError:
        out_seq += 1
        await ws.send_text(_dump({"kind": "error", "seq": out_seq, "re": None, "message": "invalid JSON"}))
        return out_seq, last_in
    try:
        msg = validate_control(raw)
    except ProtocolError as exc:
        re = raw.get("seq") if isinstance(raw, dict) and isinstance(raw.get("seq"), int) else None
        out_seq += 1
        await ws.send_text(_dump({"kind": "error", "seq": out_seq, "re": re, "message": str(exc)}))
        return out_seq, last_in
    seq = msg["seq"]
    if last_in is not None and seq <= last_in:
        out_seq += 1
        await ws.send_text(
            _dump({"kind": "error", "seq": out_seq, "re": seq, "message": "seq must increase"})
        )
        return out_seq, last_in
    last_in = seq
    fut = asyncio.get_running_loop().create_future()
    await session.controls.put((msg, fut))
    ok, err = await fut
    out_seq += 1
    if ok:
        await ws.send_text(_dump({"kind": "ack", "seq": out_seq, "re": seq}))
    else:
        await ws.send_text(_dump({"kind": "error", "seq": out_seq, "re": seq, "message": err}))
    return out_seq, last_in


def create_app(
    scenario: Scenario,
    start_paused: bool = False,
    log_path: str | None = None,
    realtime: bool = True,
) -> FastAPI:
    session = Session(scenario, start_paused=start_paused, log_path=log_path, realtime=realtime)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        session.start()
        try:
            yield
        finally:
            await session.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        cid, q = session.attach()
        out_seq = 0
        last_in = None
        last_cost = None
        client_gen = None
        recv = asyncio.create_task(websocket.receive_text())
        pull = asyncio.create_task(q.get())
        try:
            while True:
                done, _ = await asyncio.wait({recv, pull}, return_when=asyncio.FIRST_COMPLETED)
                if recv in done:
                    text = recv.result()
                    out_seq, last_in = await _handle_text(websocket, session, text, out_seq, last_in)
                    recv = asyncio.create_task(websocket.receive_text())
                if pull in done:
                    gen, state, cost, info = pull.result()
                    if gen != client_gen:
                        client_gen = gen
                        last_cost = None
                    out_seq += 1
                    msg, last_cost = snapshot_message(state, cost, info, out_seq, last_cost)
                    await websocket.send_text(_dump(msg))
                    pull = asyncio.create_task(q.get())
        except WebSocketDisconnect:
            pass
        finally:
            recv.cancel()
            pull.cancel()
            session.detach(cid)

    return app


def serve(
    scenario: Scenario,
    port: int,
    host: str = "127.0.0.1",
    log_path: str | None = None,
    start_paused: bool = False,
):
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(scenario, start_paused=start_paused, log_path=log_path)
    uvicorn.run(app, host=host, port=port, log_level="warning")
