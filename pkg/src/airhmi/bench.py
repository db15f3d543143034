"""End-to-end benchmarks: sustained frame rate, latency, and degraded links.

Each scenario drives the whole loop on one host (synthetic source -> server
pipeline -> real loopback WebSocket, optionally through the link simulator ->
virtual-cursor client) and timestamps frame ingest and client apply with the
same monotonic clock, so end-to-end latency needs no clock synchronization.
Reported latency under an impaired link includes the injected delay.
"""

from __future__ import annotations

import asyncio
import json
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import synth
from .client import VirtualCursor, run_client
from .protocol import CommandMessage, LinkParams
from .recognizer import CLICK, HOLD_END, HOLD_START, SCROLL
from .server import HmiServer, ServerConfig
from .stabilizer import ScreenGeometry


class ScenarioInfeasible(Exception):
    pass


@dataclass
class Scenario:
    name: str
    fps: float
    duration_s: float
    script: synth.TrajectoryScript
    seed: int = 0
    link: Optional[LinkParams] = None
    drop_window_s: Optional[Tuple[float, float]] = None

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        script = synth.script_from_json(json.dumps(d["script"]))
        link = LinkParams(**d["link"]) if d.get("link") else None
        window = tuple(d["drop_window_s"]) if d.get("drop_window_s") else None
        return cls(
            name=d["name"],
            fps=float(d["fps"]),
            duration_s=float(d["duration_s"]),
            script=script,
            seed=int(d.get("seed", 0)),
            link=link,
            drop_window_s=window,
        )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return Scenario.from_dict(json.load(fh))


def bundled_scenario_path(name: str) -> Path:
    return Path(__file__).parent / "scenarios" / f"{name}.json"


@dataclass
class BenchReport:
    scenario: str
    input_fps: float
    duration_s: float
    frames_in: int
    commands_sent: int
    commands_applied: int
    p50_us: int
    p95_us: int
    p99_us: int
    events_expected: Dict[str, int] = field(default_factory=dict)
    events_observed: Dict[str, int] = field(default_factory=dict)
    max_client_queue_depth: int = 0
    decode_errors: int = 0
    checks: Dict[str, bool] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


_KIND_TO_CMD = {CLICK: "click", HOLD_START: "hold", HOLD_END: "release", SCROLL: "scroll"}


def _percentile(sorted_samples: List[int], q: float) -> int:
    if not sorted_samples:
        return 0
    idx = min(len(sorted_samples) - 1, max(0, round(q * (len(sorted_samples) - 1))))
    return sorted_samples[idx]


async def run_bench_async(scenario: Scenario) -> BenchReport:
    script = scenario.script
    if script.frame_rate != scenario.fps:
        script = synth.TrajectoryScript(
            segments=script.segments, frame_rate=scenario.fps, start=script.start
        )
    try:
        stream = synth.generate(script, seed=scenario.seed)
    except synth.InfeasibleSegment as e:
        raise ScenarioInfeasible(str(e)) from None

    with tempfile.NamedTemporaryFile(suffix=".jsonl", delete=False, mode="w") as fh:
        frames_path = fh.name
    synth.record(stream.frames, frames_path)

    ingest_wall: Dict[int, int] = {}
    applied: List[Tuple[CommandMessage, int]] = []

    cfg = ServerConfig(port=0, replay_path=frames_path, pace=True, link=scenario.link)
    server = HmiServer(cfg, on_ingest=lambda ts, wall: ingest_wall.setdefault(ts, wall))
    await server.start(pipeline=False)

    screen = ScreenGeometry(1920, 1080)
    cursor = VirtualCursor(screen)
    stop = asyncio.Event()
    client_task = asyncio.create_task(
        run_client(
            f"ws://127.0.0.1:{server.port}/cursor",
            screen,
            cursor=cursor,
            stop=stop,
            on_apply=lambda msg, wall: applied.append((msg, wall)),
            name="bench",
        )
    )
    for _ in range(200):
        if server._clients:
            break
        await asyncio.sleep(0.01)
    if not server._clients:
        raise ScenarioInfeasible("bench client failed to connect")

    outage_task = None
    if scenario.drop_window_s and server.link is not None:
        t_on, t_off = scenario.drop_window_s

        async def outage():
            while not ingest_wall:
                await asyncio.sleep(0.005)
            t0_ns = min(ingest_wall.values())
            delay_on = t0_ns / 1e9 + t_on - time.perf_counter_ns() / 1e9
            await asyncio.sleep(max(0.0, delay_on))
            server.link.drop_prob = 1.0
            await asyncio.sleep(t_off - t_on)
            server.link.drop_prob = scenario.link.drop_prob

        outage_task = asyncio.create_task(outage())

    wall_start = time.perf_counter()
    server.start_pipeline()
    await server.run_until_source_end()
    await server.drain(timeout=30.0)
    wall_elapsed = time.perf_counter() - wall_start
    await asyncio.sleep(0.2)  # let in-flight socket writes land
    stop.set()
    await server.stop()
    await asyncio.gather(client_task, return_exceptions=True)
    if outage_task:
        outage_task.cancel()
        await asyncio.gather(outage_task, return_exceptions=True)
    Path(frames_path).unlink(missing_ok=True)

    latencies = sorted(
        (wall - ingest_wall[msg.ts_us]) // 1000
        for msg, wall in applied
        if msg.ts_us in ingest_wall
    )
    expected: Dict[str, int] = {}
    for lab in stream.labels:
        cmd = _KIND_TO_CMD[lab.kind]
        expected[cmd] = expected.get(cmd, 0) + 1
    observed: Dict[str, int] = {}
    for msg, _ in applied:
        if msg.t != "move":
            observed[msg.t] = observed.get(msg.t, 0) + 1

    report = BenchReport(
        scenario=scenario.name,
        input_fps=scenario.fps,
        duration_s=scenario.duration_s,
        frames_in=server.metrics.frames_in,
        commands_sent=server.metrics.commands_sent,
        commands_applied=len(applied),
        p50_us=_percentile(latencies, 0.50),
        p95_us=_percentile(latencies, 0.95),
        p99_us=_percentile(latencies, 0.99),
        events_expected=expected,
        events_observed=observed,
        max_client_queue_depth=server.max_client_queue_depth,
        decode_errors=cursor.decode_errors,
    )
    report.notes.append(f"wall_elapsed_s={wall_elapsed:.2f}")
    _evaluate(scenario, report, stream, applied, wall_elapsed)
    return report


def _evaluate(scenario, report: BenchReport, stream, applied, wall_elapsed: float):
    checks = report.checks
    name = scenario.name
    seqs = [m.seq for m, _ in applied]
    checks["seq_strictly_increasing"] = all(a < b for a, b in zip(seqs, seqs[1:]))
    if name == "clean_120fps":
        checks["p95_under_20ms"] = 0 < report.p95_us < 20_000
        checks["all_events_delivered_once"] = report.events_observed == report.events_expected
    elif name == "burst_300fps":
        checks["all_frames_ingested"] = report.frames_in == len(stream.frames)
        checks["all_events_delivered_once"] = report.events_observed == report.events_expected
        checks["bounded_queues"] = report.max_client_queue_depth <= 16
        checks["kept_realtime_pace"] = wall_elapsed < scenario.duration_s * 1.3 + 2.0
    elif name == "dropout_2s":
        checks["freeze_then_jump"] = _check_freeze_jump(scenario, applied)
        checks["all_events_delivered_once"] = report.events_observed == report.events_expected
    elif name == "bandwidth_10pct":
        checks["all_events_delivered_once"] = report.events_observed == report.events_expected
        checks["zero_decode_errors"] = report.decode_errors == 0
    elif name == "delay_50ms":
        checks["delay_reflected"] = report.p50_us >= 50_000
        checks["all_events_delivered_once"] = report.events_observed == report.events_expected
    else:
        checks["all_events_delivered_once"] = report.events_observed == report.events_expected


def _check_freeze_jump(scenario, applied) -> bool:
    """Position trace must be: received prefix, constant during the outage,
    then a jump to fresh coordinates; nothing from inside the window replayed."""
    if not scenario.drop_window_s:
        return False
    t_on, t_off = scenario.drop_window_s
    on_us, off_us = int(t_on * 1e6), int(t_off * 1e6)
    moves = [m for m, _ in applied if m.t == "move"]
    if not moves:
        return False
    inside = [m for m in moves if on_us + 50_000 <= m.ts_us < off_us]
    if inside:
        return False  # motion from the outage window must never be replayed
    before = [m for m in moves if m.ts_us < on_us]
    after = [m for m in moves if m.ts_us >= off_us]
    if not before or not after:
        return False
    jump = after[0]
    last = before[-1]
    return (jump.x, jump.y) != (last.x, last.y)


def run_bench(scenario: Scenario) -> BenchReport:
    return asyncio.run(run_bench_async(scenario))
