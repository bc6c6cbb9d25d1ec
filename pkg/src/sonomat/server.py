"""WebSocket session service.

One control task owns the Session and ticks it at the configured rate in sim
time (wall-clock paced, drift-corrected); connection handlers only move
validated messages onto the inbound queue and fan snapshots/events out. The
simulation core never depends on this module, so headless replay stays
single-threaded and bit-reproducible.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import replace
from typing import Any

import websockets

from sonomat.acoustics.field import field_slice
from sonomat.config import Config
from sonomat.geometry import pose_to_transform
from sonomat.protocol import (
    ConfigGetMessage,
    FieldGetMessage,
    FrameTooLarge,
    HandMessage,
    MAX_FRAME_BYTES,
    ProtocolError,
    ResetMessage,
    ScenarioMessage,
    decode_message,
    encode_message,
    error_message,
)
from sonomat.session import Session

log = logging.getLogger("sonomat.server")


def field_reply(session: Session, msg: FieldGetMessage) -> dict[str, Any]:
    """Field slice around a platform's delivered focus (focal plane)."""
    status = session.statuses.get(msg.platform)
    if status is None:
        raise ProtocolError(f"no platform {msg.platform}")
    if status.solution is None:
        raise ProtocolError(f"platform {msg.platform} has no active focus")
    platform = next(p for p in session.platforms if p.id == msg.platform)
    array = session.base_array.moved(pose_to_transform(platform.pose))
    focus = status.solution.focus
    grid = field_slice(
        array, status.solution, "z", focus.z,
        extent=msg.extent, resolution=msg.resolution,
        center=(focus.x, focus.y),
    )
    values = [[None if v != v else v for v in row] for row in grid.values.tolist()]
    return {
        "type": "field",
        "platform": msg.platform,
        "plane": f"z={focus.z!r}",
        "u0": float(grid.u_coords[0]),
        "v0": float(grid.v_coords[0]),
        "nx": len(grid.u_coords),
        "ny": len(grid.v_coords),
        "resolution": msg.resolution,
        "values": values,
    }


class SessionService:
    def __init__(self, config: Config):
        self.config = config
        self.session = Session(config)
        self.clients: set = set()
        self._running = False

    # -- message routing ----------------------------------------------------

    async def _send(self, ws, text: str) -> None:
        try:
            await ws.send(text)
        except websockets.ConnectionClosed:
            pass

    async def broadcast(self, text: str) -> None:
        for ws in list(self.clients):
            await self._send(ws, text)

    async def handle_message(self, ws, raw) -> None:
        try:
            msg = decode_message(raw)
        except FrameTooLarge as exc:
            log.warning("closing connection: %s", exc.reason)
            await ws.close(code=1009, reason="frame too large")
            return
        except ProtocolError as exc:
            await self._send(ws, error_message(exc.reason))
            return

        if isinstance(msg, HandMessage):
            # live inputs are stamped into sim time on arrival
            stamped = replace(msg.frame, t=self.session.sim_time)
            self.session.submit_frame(stamped)
        elif isinstance(msg, ScenarioMessage):
            try:
                if msg.action == "load":
                    self.session.load_scenario(msg.name)
                else:
                    self.session.stop_scenario()
            except (ValueError, OSError) as exc:
                await self._send(ws, error_message(f"scenario: {exc}"))
        elif isinstance(msg, ConfigGetMessage):
            await self._send(ws, encode_message(
                {"type": "config", "config": self.config.to_json_dict()}
            ))
        elif isinstance(msg, ResetMessage):
            self.session = Session(replace(self.config, seed=msg.seed))
        elif isinstance(msg, FieldGetMessage):
            try:
                await self._send(ws, encode_message(field_reply(self.session, msg)))
            except ProtocolError as exc:
                await self._send(ws, error_message(exc.reason))

    async def handler(self, ws) -> None:
        self.clients.add(ws)
        await self._send(ws, encode_message(
            {"type": "config", "config": self.config.to_json_dict()}
        ))
        try:
            async for raw in ws:
                await self.handle_message(ws, raw)
        except websockets.ConnectionClosed:
            pass
        finally:
            self.clients.discard(ws)

    # -- control loop -------------------------------------------------------

    async def run_ticks(self) -> None:
        loop = asyncio.get_running_loop()
        dt = self.config.control_dt
        deadline = loop.time()
        self._running = True
        while self._running:
            session = self.session
            snapshot = session.tick()
            if snapshot is not None:
                for event in snapshot["events"]:
                    await self.broadcast(encode_message({"type": "event", **event}))
                await self.broadcast(encode_message(snapshot))
            deadline += dt
            await asyncio.sleep(max(0.0, deadline - loop.time()))

    def stop(self) -> None:
        self._running = False

    async def serve(self, host: str, port: int) -> None:
        async with websockets.serve(
            self.handler, host, port, max_size=MAX_FRAME_BYTES
        ):
            log.info("serving on ws://%s:%d at %d Hz control", host, port,
                     self.config.control_hz)
            await self.run_ticks()


def serve_forever(config: Config, host: str = "127.0.0.1", port: int = 8765) -> None:
    asyncio.run(SessionService(config).serve(host, port))
