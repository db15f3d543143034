"""Pipeline server: frame source -> validate -> recognize -> stabilize -> broadcast.

One asyncio process owns three logical stages: ingest (replay file, synth
script, or live `/feed` websocket), processing (recognizer + stabilizer,
single-owner state), and fan-out (per-client bounded send queues on
`/cursor`). Slow clients get stale moves coalesced away; discrete commands
(click/hold/release/scroll) are never dropped by the sender, and a client
whose queue still overflows is disconnected rather than stalling the rest.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import dataclass, field
from typing import AsyncIterator, Callable, Dict, List, Optional, Tuple

from websockets.asyncio.server import serve as ws_serve

from . import synth
from .model import FrameError, HandFrame, InteractionBox, Vec3, validate_frame
from .protocol import (
    CommandMessage,
    FrameMessage,
    HelloMessage,
    LinkParams,
    LinkSimulator,
    ProtocolError,
    decode,
    encode,
)
from .recognizer import (
    CLICK,
    CURSOR_MOVE,
    HOLD_END,
    HOLD_START,
    SCROLL,
    Mode,
    Recognizer,
    RecognizerParams,
)
from .stabilizer import FilterParams, FilterState, ScreenGeometry, apply_deadzone, filter_update, map_to_screen

log = logging.getLogger("airhmi.server")

CLIENT_QUEUE_LIMIT = 128
METRICS_SAMPLE_CAP = 200_000


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    # exactly one of these three selects the frame source
    replay_path: Optional[str] = None
    synth_script: Optional[str] = None
    live_feed: bool = False
    synth_seed: int = 0
    pace: bool = True                      # pace replay/synth frames by their timestamps
    box: InteractionBox = field(default_factory=InteractionBox.default)
    filter_params: FilterParams = field(default_factory=FilterParams)
    recognizer_params: RecognizerParams = field(default_factory=RecognizerParams)
    screen: ScreenGeometry = field(default_factory=lambda: ScreenGeometry(1920, 1080))
    link: Optional[LinkParams] = None      # simulated impairment on outbound commands
    metrics_path: Optional[str] = None

    def __post_init__(self):
        sources = sum(1 for s in (self.replay_path, self.synth_script) if s) + int(self.live_feed)
        if sources != 1:
            raise ValueError("exactly one frame source must be configured")


def config_from_dict(d: dict) -> ServerConfig:
    box = InteractionBox.default()
    if "box" in d:
        b = d["box"]
        box = InteractionBox(Vec3(*b["min_corner"]), Vec3(*b["max_corner"]))
    fp = FilterParams(**d.get("filter", {}))
    rp = RecognizerParams(**d.get("recognizer", {}))
    screen = ScreenGeometry(**d.get("screen", {"width_px": 1920, "height_px": 1080}))
    link = LinkParams(**d["link"]) if d.get("link") else None
    src = d.get("source", {})
    return ServerConfig(
        host=d.get("host", "127.0.0.1"),
        port=d.get("port", 8765),
        replay_path=src.get("replay"),
        synth_script=src.get("synth_script"),
        live_feed=bool(src.get("live_feed", False)),
        synth_seed=src.get("seed", 0),
        pace=src.get("pace", True),
        box=box,
        filter_params=fp,
        recognizer_params=rp,
        screen=screen,
        link=link,
        metrics_path=d.get("metrics_path"),
    )


def load_config(path: str) -> ServerConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


@dataclass
class PipelineMetrics:
    frames_in: int = 0
    events_out: int = 0
    commands_sent: int = 0
    latency_samples_us: List[int] = field(default_factory=list)
    frame_walls_ns: List[int] = field(default_factory=list)

    def record_latency(self, us: int):
        if len(self.latency_samples_us) < METRICS_SAMPLE_CAP:
            self.latency_samples_us.append(us)

    def fps_estimate(self, now_ns: int) -> float:
        cutoff = now_ns - 1_000_000_000
        recent = [w for w in self.frame_walls_ns[-2000:] if w >= cutoff]
        return float(len(recent))

    def percentile_us(self, q: float) -> int:
        if not self.latency_samples_us:
            return 0
        s = sorted(self.latency_samples_us)
        idx = min(len(s) - 1, max(0, round(q * (len(s) - 1))))
        return s[idx]

    def snapshot(self) -> dict:
        now_ns = time.perf_counter_ns()
        return {
            "ts_us": time.time_ns() // 1000,
            "frames_in": self.frames_in,
            "events_out": self.events_out,
            "commands_sent": self.commands_sent,
            "p50_us": self.percentile_us(0.50),
            "p95_us": self.percentile_us(0.95),
            "fps": self.fps_estimate(now_ns),
        }


class _ClientConn:
    """One `/cursor` subscriber with a bounded, coalescing send queue."""

    def __init__(self, ws, name: str):
        self.ws = ws
        self.name = name
        self.queue: List[CommandMessage] = []
        self.wakeup = asyncio.Event()
        self.dead = False
        self.max_queue_depth = 0

    def enqueue(self, msg: CommandMessage) -> bool:
        """Returns False when the client must be dropped (overflow)."""
        q = self.queue
        if msg.t == "move":
            # moves are absolute positions: the newest supersedes any unsent
            # ones, which keeps slow clients jumping to fresh coordinates
            stale = [i for i, queued in enumerate(q) if queued.t == "move"]
            for i in reversed(stale):
                del q[i]
        elif len(q) >= CLIENT_QUEUE_LIMIT:
            return False  # discrete command with no room: overflow
        q.append(msg)
        self.max_queue_depth = max(self.max_queue_depth, len(q))
        self.wakeup.set()
        return True


class HmiServer:
    def __init__(
        self,
        config: ServerConfig,
        on_ingest: Optional[Callable[[int, int], None]] = None,
        on_command: Optional[Callable[[CommandMessage], None]] = None,
    ):
        self.config = config
        self.metrics = PipelineMetrics()
        self.recognizer = Recognizer(box=config.box, params=config.recognizer_params)
        self._filter: Optional[FilterState] = None
        self._seq = 0
        self._clients: List[_ClientConn] = []
        self._feed_queue: asyncio.Queue = asyncio.Queue(maxsize=1024)
        self._prev_ts = -1
        self._last_pixel: Optional[Tuple[int, int]] = None
        self._stopping = asyncio.Event()
        self._on_ingest = on_ingest
        self._on_command = on_command
        self.link: Optional[LinkSimulator] = LinkSimulator(config.link) if config.link else None
        self.max_client_queue_depth = 0
        self._server = None
        self._tasks: List[asyncio.Task] = []
        self.port: Optional[int] = None
        self._source_done = False

    # -- frame sources ---------------------------------------------------

    async def _paced(self, frames) -> AsyncIterator[HandFrame]:
        start_ns = time.perf_counter_ns()
        for frame in frames:
            if self.config.pace:
                target_ns = start_ns + frame.ts_us * 1000
                delay = (target_ns - time.perf_counter_ns()) / 1e9
                if delay > 0:
                    await asyncio.sleep(delay)
            else:
                await asyncio.sleep(0)
            yield frame

    async def _source(self) -> AsyncIterator[HandFrame]:
        cfg = self.config
        if cfg.replay_path:
            async for f in self._paced(synth.replay(cfg.replay_path)):
                yield f
        elif cfg.synth_script:
            script = synth.load_script(cfg.synth_script)
            stream = synth.generate(script, seed=cfg.synth_seed, box=cfg.box, params=cfg.recognizer_params)
            async for f in self._paced(stream.frames):
                yield f
        else:
            while not self._stopping.is_set():
                frame = await self._feed_queue.get()
                if frame is None:
                    return
                yield frame

    # -- pipeline ---------------------------------------------------------

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _commands_for(self, events) -> List[CommandMessage]:
        cmds: List[CommandMessage] = []
        for ev in events:
            if ev.kind == CURSOR_MOVE:
                if self._filter is None:
                    self._filter = FilterState.initial(ev.norm, ev.ts_us)
                    gated = ev.norm
                else:
                    self._filter, filtered = filter_update(
                        self._filter, ev.norm, ev.ts_us, self.config.filter_params
                    )
                    self._filter, gated = apply_deadzone(self._filter, filtered, self.config.filter_params)
                pixel = map_to_screen(gated, self.config.screen)
                if pixel != self._last_pixel:
                    self._last_pixel = pixel
                    cmds.append(
                        CommandMessage(t="move", x=pixel[0], y=pixel[1], seq=self._next_seq(), ts_us=ev.ts_us)
                    )
            elif ev.kind == CLICK:
                px = map_to_screen(ev.norm, self.config.screen)
                self._last_pixel = px
                cmds.append(CommandMessage(t="click", x=px[0], y=px[1], seq=self._next_seq(), ts_us=ev.ts_us))
            elif ev.kind == HOLD_START:
                cmds.append(CommandMessage(t="hold", seq=self._next_seq(), ts_us=ev.ts_us))
            elif ev.kind == HOLD_END:
                cmds.append(CommandMessage(t="release", seq=self._next_seq(), ts_us=ev.ts_us))
            elif ev.kind == SCROLL:
                cmds.append(
                    CommandMessage(
                        t="scroll", dir=ev.direction, n=ev.notches, seq=self._next_seq(), ts_us=ev.ts_us
                    )
                )
        return cmds

    def process_frame(self, frame: HandFrame) -> List[CommandMessage]:
        """Validate and run one frame through the pipeline; returns commands."""
        ingest_ns = time.perf_counter_ns()
        try:
            validate_frame(frame, self._prev_ts)
        except FrameError as e:
            log.warning("rejected frame: %s", e)
            return []
        self._prev_ts = frame.ts_us
        self.metrics.frames_in += 1
        self.metrics.frame_walls_ns.append(ingest_ns)
        if len(self.metrics.frame_walls_ns) > 4000:
            del self.metrics.frame_walls_ns[:2000]
        if self._on_ingest:
            self._on_ingest(frame.ts_us, ingest_ns)
        events = self.recognizer.update(frame)
        self.metrics.events_out += len(events)
        cmds = self._commands_for(events)
        for cmd in cmds:
            self.broadcast(cmd)
        self.metrics.record_latency((time.perf_counter_ns() - ingest_ns) // 1000)
        return cmds

    def broadcast(self, cmd: CommandMessage):
        self.metrics.commands_sent += 1
        if self._on_command:
            self._on_command(cmd)
        for client in list(self._clients):
            if client.dead:
                continue
            if not client.enqueue(cmd):
                log.warning("client %s queue overflow; dropping client", client.name)
                client.dead = True
                client.wakeup.set()
            self.max_client_queue_depth = max(self.max_client_queue_depth, client.max_queue_depth)

    async def _pipeline_task(self):
        try:
            async for frame in self._source():
                if self._stopping.is_set():
                    break
                self.process_frame(frame)
        finally:
            self._source_done = True

    # -- websocket handlers ------------------------------------------------

    async def _sender_task(self, client: _ClientConn):
        try:
            while not client.dead:
                if not client.queue:
                    client.wakeup.clear()
                    if self._stopping.is_set():
                        break
                    await client.wakeup.wait()
                    continue
                cmd = client.queue.pop(0)
                payload = encode(cmd)
                if self.link is not None:
                    now_us = time.perf_counter_ns() // 1000
                    deliver_at = self.link.transmit(payload, now_us)
                    if deliver_at is None:
                        continue
                    delay = (deliver_at - time.perf_counter_ns() // 1000) / 1e6
                    if delay > 0:
                        await asyncio.sleep(delay)
                await client.ws.send(payload.decode("utf-8"))
        except Exception as e:  # connection failure drops this client only
            log.info("client %s send failed: %s", client.name, e)
        finally:
            client.dead = True

    async def _handle_cursor(self, ws):
        name = "?"
        try:
            raw = await ws.recv()
            msg = decode(raw)
            if not isinstance(msg, HelloMessage):
                log.warning("cursor client did not send hello; closing")
                return
            name = msg.name or "client"
        except ProtocolError as e:
            log.warning("bad hello: %s", e)
            return
        except Exception:
            return
        client = _ClientConn(ws, name)
        # resync: current hold state, then the freshest known position
        if self.recognizer.mode is Mode.HOLDING:
            client.enqueue(CommandMessage(t="hold", seq=self._next_seq(), ts_us=self._prev_ts if self._prev_ts > 0 else 0))
        if self._last_pixel is not None:
            client.enqueue(
                CommandMessage(
                    t="move",
                    x=self._last_pixel[0],
                    y=self._last_pixel[1],
                    seq=self._next_seq(),
                    ts_us=self._prev_ts if self._prev_ts > 0 else 0,
                )
            )
        self._clients.append(client)
        log.info("client %s connected (%d total)", name, len(self._clients))
        sender = asyncio.create_task(self._sender_task(client))
        try:
            async for _ in ws:  # clients do not speak after hello; drain until close
                pass
        except Exception:
            pass
        finally:
            client.dead = True
            client.wakeup.set()
            await asyncio.gather(sender, return_exceptions=True)
            if client in self._clients:
                self._clients.remove(client)
            log.info("client %s disconnected", name)

    async def _handle_feed(self, ws):
        try:
            async for raw in ws:
                try:
                    msg = decode(raw)
                except ProtocolError as e:
                    log.warning("bad feed message: %s", e)
                    continue
                if isinstance(msg, FrameMessage):
                    if self.config.live_feed:
                        await self._feed_queue.put(msg.frame)
                elif isinstance(msg, HelloMessage):
                    continue
                else:
                    log.warning("unexpected message kind on /feed")
        except Exception as e:
            log.info("feed closed: %s", e)

    async def _handler(self, ws):
        path = ws.request.path.split("?")[0]
        if path == "/cursor":
            await self._handle_cursor(ws)
        elif path == "/feed":
            await self._handle_feed(ws)
        else:
            await ws.close(code=4004, reason="unknown endpoint")

    async def _metrics_task(self):
        if not self.config.metrics_path:
            return
        with open(self.config.metrics_path, "w", encoding="utf-8") as fh:
            while not self._stopping.is_set():
                try:
                    await asyncio.wait_for(self._stopping.wait(), timeout=1.0)
                except asyncio.TimeoutError:
                    pass
                fh.write(json.dumps(self.metrics.snapshot()) + "\n")
                fh.flush()

    # -- lifecycle ----------------------------------------------------------

    async def start(self, pipeline: bool = True):
        self._server = await ws_serve(self._handler, self.config.host, self.config.port)
        self.port = next(iter(self._server.sockets)).getsockname()[1]
        self._tasks = [asyncio.create_task(self._metrics_task())]
        if pipeline:
            self.start_pipeline()
        log.info("listening on ws://%s:%d (/feed, /cursor)", self.config.host, self.port)

    def start_pipeline(self):
        self._pipeline = asyncio.create_task(self._pipeline_task())
        self._tasks.append(self._pipeline)

    async def drain(self, timeout: float = 5.0):
        """Wait for all queued commands to flush to connected clients."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if all(not c.queue or c.dead for c in self._clients):
                return
            await asyncio.sleep(0.02)

    async def stop(self):
        self._stopping.set()
        await self.drain()
        for client in self._clients:
            client.wakeup.set()
        for t in self._tasks:
            t.cancel()
        await asyncio.gather(*self._tasks, return_exceptions=True)
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        if self.config.metrics_path:
            log.info("final metrics: %s", json.dumps(self.metrics.snapshot()))

    async def run_until_source_end(self):
        await self._pipeline

    async def run_forever(self):
        await self._stopping.wait()


async def run_pipeline(config: ServerConfig):
    """CLI entrypoint: serve until the source ends (file/script) or forever (live)."""
    server = HmiServer(config)
    await server.start()
    try:
        if config.live_feed:
            await server.run_forever()
        else:
            await server.run_until_source_end()
            await server.drain()
    finally:
        await server.stop()
