"""WebSocket control service.

Wraps a ControlLoop in an asyncio tick task and exposes it at ``/ws``.
Every tick the server broadcasts a JSON ``state`` frame (base64 P6 image,
IR distances, pose, mode, recording flag, and the recognition match in
autonomous mode). Clients send ``command``, ``set_mode`` and ``record``
messages; commands overwrite each other between ticks (latest wins).
Unknown message types are logged and ignored; a frame that is not valid
JSON gets an error frame back and the connection is closed.

Slow consumers never stall the loop: each subscriber holds a one-slot
queue where newer state frames replace undelivered ones.
"""

from __future__ import annotations

import asyncio
import base64
import contextlib
import json
import logging
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse

from . import netpbm
from .errors import MlrError
from .memory import CommandTriple
from .runtime import ControlLoop, TickReport

log = logging.getLogger("mlr.service")

WS_PROTOCOL_ERROR = 1002


def state_message(report: TickReport) -> dict:
    match = None
    if report.recognition is not None:
        r = report.recognition
        match = {
            "index": r.best_index,
            "scores": r.scores_of_winner,
            "command": {
                "linear": r.command.linear,
                "angular": r.command.angular,
                "fork": r.command.fork,
            },
        }
    pose = report.frame.pose
    return {
        "type": "state",
        "tick": report.tick,
        "image_ppm_b64": base64.b64encode(netpbm.encode_p6(report.frame.image)).decode("ascii"),
        "distances": list(report.frame.distances),
        "pose": {"x": pose.x, "y": pose.y, "yaw": pose.yaw},
        "mode": "autonomous" if report.recognition is not None else "manual",
        "recording": report.recording,
        "match": match,
    }


class TickService:
    """Runs the loop at wall-clock dt and fans state frames out to subscribers."""

    def __init__(self, loop: ControlLoop, steps: int | None = None):
        self.loop = loop
        self.steps = steps
        self.subscribers: set[asyncio.Queue] = set()
        self.finished = asyncio.Event()

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=1)
        self.subscribers.add(q)
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        self.subscribers.discard(q)

    def _broadcast(self, message: dict) -> None:
        for q in self.subscribers:
            if q.full():
                with contextlib.suppress(asyncio.QueueEmpty):
                    q.get_nowait()
            q.put_nowait(message)

    async def run(self) -> None:
        try:
            while self.steps is None or self.loop.tick < self.steps:
                report = self.loop.run_tick()
                self._broadcast(state_message(report))
                await asyncio.sleep(self.loop.config.dt)
        finally:
            if self.loop.recording:
                self.loop.stop_recording()
            self.finished.set()

    # -- client message handling --

    def handle(self, message: dict) -> None:
        kind = message.get("type")
        try:
            if kind == "command":
                self.loop.set_command(
                    CommandTriple(
                        linear=float(message["linear"]),
                        angular=float(message["angular"]),
                        fork=float(message["fork"]),
                    )
                )
            elif kind == "set_mode":
                self.loop.set_mode(str(message["mode"]))
            elif kind == "record":
                action = message.get("action")
                if action == "start":
                    self.loop.start_recording()
                elif action == "stop":
                    self.loop.stop_recording()
                else:
                    log.warning("ignoring record message with action %r", action)
            else:
                log.warning("ignoring unknown message type %r", kind)
        except (KeyError, TypeError, ValueError, MlrError) as e:
            log.warning("ignoring bad %r message: %s", kind, e)


def create_app(service: TickService, frontend_dir: str | None = None) -> FastAPI:
    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        tick_task = asyncio.create_task(service.run())
        try:
            yield
        finally:
            tick_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await tick_task

    app = FastAPI(lifespan=lifespan)

    @app.get("/")
    async def index() -> HTMLResponse:
        if frontend_dir:
            page = Path(frontend_dir) / "index.html"
            if page.exists():
                return HTMLResponse(page.read_text())
        return HTMLResponse("<h1>mlr control service</h1><p>connect a client to /ws</p>")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        queue = service.subscribe()

        async def sender() -> None:
            while True:
                await ws.send_json(await queue.get())

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError as e:
                    await ws.send_json({"type": "error", "error": f"malformed JSON: {e}"})
                    await ws.close(code=WS_PROTOCOL_ERROR)
                    break
                if not isinstance(message, dict):
                    await ws.send_json({"type": "error", "error": "message must be an object"})
                    await ws.close(code=WS_PROTOCOL_ERROR)
                    break
                service.handle(message)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task
            service.unsubscribe(queue)

    return app


async def serve_async(service: TickService, port: int, frontend_dir: str | None = None) -> None:
    """Serve until the tick task finishes (bounded steps) or forever."""
    import uvicorn

    app = create_app(service, frontend_dir)
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)

    async def stop_when_finished() -> None:
        await service.finished.wait()
        # let the last frames flush before asking uvicorn to exit
        await asyncio.sleep(0.2)
        server.should_exit = True

    watcher = asyncio.create_task(stop_when_finished())
    try:
        await server.serve()
    finally:
        watcher.cancel()
        with contextlib.suppress(asyncio.CancelledError):
            await watcher
