"""Virtual-cursor client: applies server commands and survives disconnects.

The cursor freezes at the last received coordinates while the connection is
down and jumps straight to the newest position after reconnecting; missed
motion is never replayed. Reconnection uses exponential backoff, and the
held flag is re-derived from the server's resync on each fresh connection.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

from websockets.asyncio.client import connect as ws_connect

from .protocol import CommandMessage, HelloMessage, ProtocolError, decode, encode
from .stabilizer import ScreenGeometry

log = logging.getLogger("airhmi.client")

BACKOFF_INITIAL_S = 0.1
BACKOFF_CAP_S = 2.0


@dataclass(frozen=True)
class CursorState:
    x_px: int
    y_px: int
    held: bool
    connected: bool
    last_seq: int
    applied_count: int


class VirtualCursor:
    """Single-owner cursor state; observers read immutable snapshots."""

    def __init__(self, screen: ScreenGeometry, log_path: Optional[str] = None):
        self.screen = screen
        self.x_px = screen.width_px // 2
        self.y_px = screen.height_px // 2
        self.held = False
        self.connected = False
        self.last_seq = -1
        self.decode_errors = 0
        self.event_log: List[Tuple[int, CommandMessage]] = []
        self._log_fh = open(log_path, "w", encoding="utf-8") if log_path else None

    def snapshot(self) -> CursorState:
        return CursorState(
            x_px=self.x_px,
            y_px=self.y_px,
            held=self.held,
            connected=self.connected,
            last_seq=self.last_seq,
            applied_count=len(self.event_log),
        )

    def on_new_connection(self):
        # per-connection sequencing; held is re-derived from the resync
        self.connected = True
        self.last_seq = -1
        self.held = False

    def on_disconnect(self):
        self.connected = False

    def apply_command(self, msg: CommandMessage) -> bool:
        """Apply one decoded command; returns False for stale messages."""
        if msg.seq <= self.last_seq:
            log.warning("discarding stale command seq=%d (last=%d)", msg.seq, self.last_seq)
            return False
        self.last_seq = msg.seq
        if msg.t in ("move", "click"):
            self.x_px = min(max(msg.x, 0), self.screen.width_px - 1)
            self.y_px = min(max(msg.y, 0), self.screen.height_px - 1)
        elif msg.t == "hold":
            self.held = True
        elif msg.t == "release":
            if not self.held:
                log.warning("release while not held (idempotent, ignored)")
            self.held = False
        # scroll only logs
        self.event_log.append((msg.ts_us, msg))
        if self._log_fh:
            entry = {"ts_us": msg.ts_us, "cmd": json.loads(encode(msg).decode("utf-8"))}
            self._log_fh.write(json.dumps(entry, separators=(",", ":")) + "\n")
            self._log_fh.flush()
        return True

    def close(self):
        if self._log_fh:
            self._log_fh.close()
            self._log_fh = None


async def run_client(
    server_url: str,
    screen: ScreenGeometry,
    log_path: Optional[str] = None,
    name: str = "client",
    cursor: Optional[VirtualCursor] = None,
    on_apply: Optional[Callable[[CommandMessage, int], None]] = None,
    stop: Optional[asyncio.Event] = None,
) -> VirtualCursor:
    """Connect (retrying forever) and apply commands until `stop` is set."""
    cur = cursor or VirtualCursor(screen, log_path=log_path)
    stop = stop or asyncio.Event()
    backoff = BACKOFF_INITIAL_S
    while not stop.is_set():
        try:
            async with ws_connect(server_url) as ws:
                await ws.send(encode(HelloMessage(role="client", name=name)).decode("utf-8"))
                cur.on_new_connection()
                backoff = BACKOFF_INITIAL_S
                log.info("connected to %s", server_url)
                try:
                    async for raw in ws:
                        try:
                            msg = decode(raw)
                        except ProtocolError as e:
                            cur.decode_errors += 1
                            log.warning("bad command skipped: %s", e)
                            continue
                        if isinstance(msg, CommandMessage):
                            if cur.apply_command(msg) and on_apply:
                                on_apply(msg, time.perf_counter_ns())
                        if stop.is_set():
                            break
                finally:
                    cur.on_disconnect()
        except asyncio.CancelledError:
            cur.on_disconnect()
            raise
        except Exception as e:
            cur.on_disconnect()
            if stop.is_set():
                break
            log.info("connection lost (%s); retrying in %.1f s", e, backoff)
            try:
                await asyncio.wait_for(stop.wait(), timeout=backoff)
            except asyncio.TimeoutError:
                pass
            backoff = min(backoff * 2, BACKOFF_CAP_S)
    cur.close()
    return cur
