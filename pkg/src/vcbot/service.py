"""Live session service: WebSocket wire protocol around the tick loop.

One client connection owns one session.  Messages are JSON text frames; the
schema is versioned in the hello message and documented field by field in
docs/wire-schema.md.  Inputs are sampled last-writer-wins per tick: the tick
consumes the most recent input message, acknowledges it by echoing its
sequence number in the state message, and reports superseded sequence
numbers in an event message — no input is silently lost.
"""

from __future__ import annotations

import asyncio
import functools
import http.server
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import websockets

from .analysis import session_summary
from .config import RunConfig
from .observer import ObserverNet, classify, load_observer, segment_events
from .session import Session, TickRecord, write_session_log
from .training import LoadedModel, load_model, warm_state_for

SCHEMA_VERSION = 1
log = logging.getLogger(__name__)


@dataclass
class ServiceState:
    model: LoadedModel
    observer: ObserverNet | None
    config: RunConfig
    watermark: list[dict]
    log_dir: Path
    multi_session: bool = False
    active_sessions: int = 0
    session_counter: int = 0


def build_watermark(labels: list[str], positions: np.ndarray) -> list[dict]:
    """Polyline data for the hello message: one closed outline per behavior."""
    polylines = []
    for label, rows in zip(labels, positions):
        pts = [[float(x), float(y)] for x, y in rows]
        pts.append(pts[0])  # close the outline for drawing
        polylines.append({"label": label, "points": pts})
    return polylines


class LiveClassifiers:
    """Rolling observer labels for both intention streams during a session."""

    def __init__(self, observer: ObserverNet | None, y: int, gap: int):
        self.observer = observer
        self.y = y
        self.gap = gap
        self.robot_buf: list[np.ndarray] = []
        self.human_buf: list[np.ndarray] = []
        self.active_flags: list[bool] = []
        self.c_by_event: dict[int, list[int]] = {}

    def _label(self, buf: list[np.ndarray]):
        if self.observer is None or len(buf) < self.observer.buffer_steps:
            return None
        return classify(np.stack(buf), self.observer)

    def update(self, record: TickRecord) -> dict:
        self.active_flags.append(record.human_active)
        if self.observer is None:
            return {"robot_label": None, "human_label": None, "c": None, "p": None}
        size = self.observer.buffer_steps
        self.robot_buf.append(record.robot)
        self.robot_buf = self.robot_buf[-size:]
        if record.human_active and record.human is not None:
            self.human_buf.append(record.human)
            self.human_buf = self.human_buf[-size:]
        else:
            self.human_buf.clear()
        robot = self._label(self.robot_buf)
        human = self._label(self.human_buf)
        events = segment_events(self.active_flags, self.gap)
        event = events[-1]
        c = None
        p = None
        if event > 0:
            if robot is not None and human is not None:
                c = 1 if robot.index == human.index else 0
                self.c_by_event.setdefault(event, []).append(c)
            history = self.c_by_event.get(event, [])
            if history:
                p = float(np.mean(history[-self.y :]))
        return {
            "robot_label": None if robot is None else robot.category,
            "human_label": None if human is None else human.category,
            "event": event,
            "c": c,
            "p": p,
        }


def state_message(
    session_id: int, record: TickRecord, labels: dict, input_seq: int | None
) -> dict:
    human = None if record.human is None else [float(record.human[0]), float(record.human[1])]
    return {
        "kind": "state",
        "session": session_id,
        "t": record.t,
        "robot": [float(record.robot[0]), float(record.robot[1])],
        "human": human,
        "human_active": record.human_active,
        "mixed": [float(record.mixed[0]), float(record.mixed[1])],
        "nelbo": record.nelbo,
        "epochs": record.epochs_run,
        "wall_ms": record.wall_ms,
        "input_seq": input_seq,
        **labels,
    }


async def _handle_client(ws, state: ServiceState) -> None:
    if not state.multi_session and state.active_sessions > 0:
        await ws.send(json.dumps({
            "kind": "error", "session": None,
            "message": "a session is already running (start with --multi to allow more)",
        }))
        await ws.close()
        return
    state.active_sessions += 1
    state.session_counter += 1
    session_id = state.session_counter
    cfg = state.config
    try:
        await ws.send(json.dumps({
            "kind": "hello",
            "schema": SCHEMA_VERSION,
            "session": session_id,
            "tick_ms": cfg.session.tick_ms,
            "total_ticks": cfg.session.total_ticks,
            "window_size": cfg.window.size,
            "gamma": cfg.mixer.gamma,
            "rate_cap": cfg.mixer.rate_cap,
            "categories": state.model.labels,
            "watermark": state.watermark,
        }))

        latest: dict = {"seq": None, "pos": None, "active": False}
        dropped: list[int] = []

        async def reader():
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send(json.dumps({
                        "kind": "error", "session": session_id,
                        "message": "unparseable message",
                    }))
                    continue
                if msg.get("kind") == "input":
                    if latest["seq"] is not None:
                        dropped.append(latest["seq"])
                    latest["seq"] = msg.get("seq")
                    latest["pos"] = np.array(
                        [float(msg["x"]), float(msg["y"])], dtype=np.float64
                    )
                    latest["active"] = bool(msg.get("active", False))
                elif msg.get("kind") == "bye":
                    break

        reader_task = asyncio.create_task(reader())
        session = Session(
            state.model.params, cfg, warm_state=warm_state_for(state.model, cfg)
        )
        classifiers = LiveClassifiers(
            state.observer, cfg.observer.congruence_y, cfg.observer.event_gap
        )
        records: list[TickRecord] = []
        period = cfg.session.tick_ms / 1000.0
        budget = cfg.window.budget_ms / 1000.0
        loop = asyncio.get_running_loop()
        t0 = loop.time()
        try:
            for i in range(cfg.session.total_ticks):
                deadline = t0 + i * period
                delay = deadline - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                if reader_task.done() or ws.close_code is not None:
                    break
                seq = latest["seq"]
                pos = latest["pos"]
                active = latest["active"]
                latest["seq"] = None
                dropped_now, dropped[:] = dropped[:], []
                record = await loop.run_in_executor(
                    None, functools.partial(
                        session.tick, pos, active, budget_s=budget
                    )
                )
                records.append(record)
                labels = classifiers.update(record)
                await ws.send(json.dumps(
                    state_message(session_id, record, labels, seq)
                ))
                if dropped_now:
                    await ws.send(json.dumps({
                        "kind": "event", "session": session_id, "t": record.t,
                        "event": "inputs_superseded", "seqs": dropped_now,
                    }))
            else:
                await ws.send(json.dumps({
                    "kind": "bye", "session": session_id, "reason": "finished",
                }))
        finally:
            reader_task.cancel()
            if records:
                state.log_dir.mkdir(parents=True, exist_ok=True)
                log_path = state.log_dir / f"session-{session_id:04d}.csv"
                write_session_log(records, log_path)
                summary = session_summary(
                    records, state.observer,
                    cfg.observer.congruence_y, cfg.observer.event_gap,
                )
                summary["config_hash"] = cfg.hash()
                summary_path = state.log_dir / f"session-{session_id:04d}.json"
                summary_path.write_text(json.dumps(summary, indent=2) + "\n")
                log.info("session %d: wrote %s", session_id, log_path)
    except websockets.ConnectionClosed:
        log.info("session %d: client disconnected", session_id)
    finally:
        state.active_sessions -= 1


def _serve_static(ui_dir: Path, port: int) -> threading.Thread:
    handler = functools.partial(
        http.server.SimpleHTTPRequestHandler, directory=str(ui_dir)
    )
    httpd = http.server.ThreadingHTTPServer(("0.0.0.0", port), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    log.info("serving UI from %s at http://localhost:%d", ui_dir, port)
    return thread


async def serve_async(
    config: RunConfig,
    model_path: str | Path,
    observer_path: str | Path | None,
    host: str = "127.0.0.1",
    port: int = 8765,
    log_dir: str | Path = "logs",
    multi_session: bool = False,
    ui_dir: str | Path | None = None,
    ui_port: int = 8080,
    ready_event: asyncio.Event | None = None,
    bound: dict | None = None,
) -> None:
    model = load_model(model_path)  # refuses to start when missing/corrupt
    observer = load_observer(observer_path) if observer_path else None
    from .dataset import macaw_cub_primitives

    # Watermark from the model's training data layout when available on disk,
    # else from the built-in demo set with the checkpoint's labels.
    demo = macaw_cub_primitives()
    order = [demo.labels.index(lb) for lb in model.labels if lb in demo.labels]
    watermark = build_watermark(
        [demo.labels[i] for i in order], demo.positions[order]
    ) if order else []

    state = ServiceState(
        model=model, observer=observer, config=config, watermark=watermark,
        log_dir=Path(log_dir), multi_session=multi_session,
    )
    if ui_dir is not None:
        _serve_static(Path(ui_dir), ui_port)

    async with websockets.serve(
        lambda ws: _handle_client(ws, state), host, port, max_queue=1024
    ) as server:
        actual_port = server.sockets[0].getsockname()[1]
        if bound is not None:
            bound["port"] = actual_port
        log.info("session service listening on ws://%s:%d", host, actual_port)
        if ready_event is not None:
            ready_event.set()
        await asyncio.Future()  # run until cancelled


def serve(**kwargs) -> None:
    try:
        asyncio.run(serve_async(**kwargs))
    except KeyboardInterrupt:
        pass
