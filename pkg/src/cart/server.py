"""TCP session service speaking newline-delimited JSON envelopes.

Each connection sends one JSON object per line. Every session runs on a
single executor task consuming a queue, so session state is never
touched concurrently. Client-facing message types: Join, Welcome,
Start, Inject, Edit, Ack, Broadcast, End, Metrics, Error.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import collab
from .collab import EditOp
from .session import (AlreadyFinished, AlreadyRunning, InvalidConfig,
                      NotEnoughUsers, RevisionTooOld, Session, SessionConfig,
                      UnknownUser, envelope)

log = logging.getLogger("cart.server")

TICK_INTERVAL_S = 0.05


def now_ms() -> int:
    return time.monotonic_ns() // 1_000_000


@dataclass
class _Client:
    user: int
    writer: asyncio.StreamWriter

    def send(self, message: dict) -> None:
        self.writer.write(json.dumps(message, ensure_ascii=False).encode() + b"\n")


@dataclass
class _SessionRuntime:
    session: Session
    queue: asyncio.Queue = field(default_factory=asyncio.Queue)
    clients: dict[int, _Client] = field(default_factory=dict)
    executor: asyncio.Task | None = None
    ticker: asyncio.Task | None = None


class SessionServer:
    def __init__(self, config: SessionConfig, persist_dir: str | None = None,
                 session_id: str | None = None, autostart: bool = True):
        self.runtime = _SessionRuntime(Session(config, session_id))
        self.persist_dir = persist_dir
        self.autostart = autostart
        self._server: asyncio.base_events.Server | None = None

    @property
    def session(self) -> Session:
        return self.runtime.session

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> int:
        self._server = await asyncio.start_server(self._on_connect, host, port)
        self.runtime.executor = asyncio.create_task(self._run_executor())
        return self._server.sockets[0].getsockname()[1]

    async def close(self) -> None:
        if self.runtime.ticker:
            self.runtime.ticker.cancel()
        if self.runtime.executor:
            self.runtime.executor.cancel()
        if self._server:
            self._server.close()
            await self._server.wait_closed()

    async def _on_connect(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                try:
                    message = json.loads(line)
                except json.JSONDecodeError:
                    writer.write(b'{"type":"Error","payload":{"error":"bad json"}}\n')
                    continue
                await self.runtime.queue.put((message, writer))
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            for user, client in list(self.runtime.clients.items()):
                if client.writer is writer:
                    del self.runtime.clients[user]
            writer.close()

    def _broadcast(self, message: dict, exclude: int | None = None) -> None:
        for user, client in self.runtime.clients.items():
            if user != exclude:
                client.send(message)

    def _send(self, user: int, message: dict) -> None:
        client = self.runtime.clients.get(user)
        if client:
            client.send(message)

    async def _run_executor(self) -> None:
        while True:
            message, writer = await self.runtime.queue.get()
            try:
                self._dispatch(message, writer)
            except Exception:
                log.exception("error handling %s", message.get("type"))

    def _dispatch(self, message: dict, writer: asyncio.StreamWriter) -> None:
        session = self.session
        msg_type = message.get("type")
        sender = int(message.get("sender", -1))
        payload = message.get("payload") or {}
        t = now_ms()

        def err(text: str) -> None:
            writer.write(json.dumps(envelope(
                "Error", session.id, 0, {"error": text}, t)).encode() + b"\n")

        if msg_type == "Join":
            try:
                snapshot = session.join(sender)
            except (InvalidConfig, AlreadyFinished) as exc:
                return err(str(exc))
            self.runtime.clients[sender] = _Client(sender, writer)
            if len(session.users) == len(session.assignments) and session.assignments:
                # group complete: everyone gets a Welcome with their assignment
                for user in session.users:
                    self._send(user, envelope("Welcome", session.id, 0,
                                              session.snapshot_payload(user), t))
                if self.autostart and session.phase == "lobby":
                    self._start_session(t)
            else:
                self._send(sender, envelope("Welcome", session.id, 0, snapshot, t))
        elif msg_type == "Start":
            try:
                self._start_session(t)
            except (NotEnoughUsers, AlreadyRunning, AlreadyFinished) as exc:
                err(str(exc))
        elif msg_type == "Edit":
            try:
                op = EditOp.from_json(int(payload["base_revision"]),
                                      payload["components"])
                record = session.handle_edit(sender, op, t)
            except RevisionTooOld:
                self._send(sender, envelope("Welcome", session.id, 0,
                                            session.snapshot_payload(sender), t))
                return
            except (collab.MalformedOp, collab.RevisionMismatch,
                    collab.SpanOverflow, UnknownUser, AlreadyFinished,
                    KeyError, TypeError, ValueError) as exc:
                return err(f"MalformedOp: {exc}")
            self._send(sender, envelope("Ack", session.id, 0,
                                        {"revision": record.revision}, t))
            self._broadcast(envelope("Broadcast", session.id, sender, {
                "revision": record.revision,
                "author": sender,
                "components": record.op.to_json(),
            }, t), exclude=sender)
        elif msg_type == "End":
            self._finalize(t)
        else:
            err(f"unknown message type: {msg_type}")

    def _start_session(self, t: int) -> None:
        session = self.session
        session.start_playback(t)
        for user in session.users:
            a = session.assignment_for(user)
            self._send(user, envelope("Start", session.id, 0, {
                "clock_origin_ms": session.clock_origin_ms,
                "audio_delay_s": a.audio_delay_s if a else 0.0,
            }, t))
        self.runtime.ticker = asyncio.create_task(self._run_ticker())

    async def _run_ticker(self) -> None:
        session = self.session
        while session.phase == "running":
            t = now_ms()
            for inject in session.injection_tick(t):
                self._broadcast(envelope("Inject", session.id, 0, inject, t))
            if session.playback_complete():
                self._finalize(now_ms())
                break
            await asyncio.sleep(TICK_INTERVAL_S)

    def _finalize(self, t: int) -> None:
        session = self.session
        if session.phase == "finished":
            return
        delta = session.finalize(t)
        self._broadcast(envelope("End", session.id, 0, {}, t))
        if delta is not None:
            self._broadcast(envelope("Metrics", session.id, 0, delta.to_dict(), t))
        if self.persist_dir:
            session.persist(Path(self.persist_dir) / session.id, delta)


async def serve_forever(config: SessionConfig, host: str, port: int,
                        persist_dir: str | None, session_id: str | None = None,
                        autostart: bool = True) -> None:
    server = SessionServer(config, persist_dir, session_id, autostart=autostart)
    bound = await server.start(host, port)
    log.info("session %s listening on %s:%d", server.session.id, host, bound)
    print(json.dumps({"session": server.session.id, "port": bound}), flush=True)
    try:
        await asyncio.Event().wait()
    finally:
        await server.close()
