"""Bundled benchmark scenarios.

clean_120fps and burst_300fps measure latency and sustained throughput on a
clean loopback; dropout_2s scripts a total outage window to exercise the
freeze-then-jump cursor semantics; bandwidth_10pct squeezes the command
stream through a tenth of its full-rate demand; delay_50ms adds a fixed
one-way delay.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import List, Tuple

from .synth import TrajectoryScript, circle, dwell, line, script_to_json, set_fingers, tap

SCENARIO_DIR = Path(__file__).parent / "scenarios"

_CY = 404.8
_OPEN = ("thumb", "index", "middle", "ring", "pinky")

# ~62 bytes/move at ~120 moves/s is ~7.4 kB/s of full-rate demand
_FULL_RATE_DEMAND_BPS = 7400


def _gesture_tour() -> Tuple[tuple, float]:
    """A ~10 s script touching every command kind: two taps, one CCW circle,
    and one drag, connected by cursor travel."""
    segs = (
        dwell(0.5),
        line((-80.0, _CY, 0.0), 150.0),
        tap(15.0, 300.0),
        dwell(0.4),
        line((30.0, _CY + 40.0, 0.0), 200.0),
        circle((10.0, _CY + 40.0, 0.0), 20.0, 1.0, "ccw", 2.0 * math.pi),
        dwell(0.3),
        set_fingers(_OPEN),
        dwell(0.3),
        line((120.0, _CY - 30.0, 0.0), 180.0),
        set_fingers(()),
        dwell(0.3),
        set_fingers(("index",)),
        dwell(0.3),
        line((0.0, _CY, 0.0), 150.0),
        tap(12.0, 200.0),
        dwell(3.0),
    )
    return segs, 10.0


def _traverse_with_taps() -> Tuple[tuple, float]:
    """Continuous motion for 10 s with taps at ~1 s and ~8.7 s, leaving the
    4-6 s stretch free of discrete events for the outage window."""
    segs = (
        dwell(0.5),
        tap(15.0, 300.0),
        dwell(0.3),
        line((-250.0, _CY, 0.0), 100.0),
        line((250.0, _CY, 0.0), 100.0),
        tap(15.0, 300.0),
        dwell(1.2),
    )
    return segs, 10.0


def build_scenarios() -> List[dict]:
    tour, tour_s = _gesture_tour()
    traverse, traverse_s = _traverse_with_taps()
    short = (
        dwell(0.4),
        tap(15.0, 300.0),
        dwell(0.3),
        line((60.0, _CY, 0.0), 150.0),
        circle((40.0, _CY, 0.0), 20.0, 1.0, "cw", 2.0 * math.pi),
        dwell(1.0),
    )

    def script_dict(segments, rate):
        return json.loads(script_to_json(TrajectoryScript(segments=segments, frame_rate=rate)))

    return [
        {
            "name": "clean_120fps",
            "fps": 120,
            "duration_s": tour_s,
            "seed": 1,
            "script": script_dict(tour, 120),
        },
        {
            "name": "burst_300fps",
            "fps": 300,
            "duration_s": tour_s,
            "seed": 2,
            "script": script_dict(tour, 300),
        },
        {
            "name": "dropout_2s",
            "fps": 120,
            "duration_s": traverse_s,
            "seed": 3,
            "link": {"delay_ms": 0.0, "jitter_ms": 0.0, "drop_prob": 0.0, "bandwidth_bps": 0, "seed": 3},
            "drop_window_s": [4.0, 6.0],
            "script": script_dict(traverse, 120),
        },
        {
            "name": "bandwidth_10pct",
            "fps": 120,
            "duration_s": tour_s,
            "seed": 4,
            "link": {
                "delay_ms": 0.0,
                "jitter_ms": 0.0,
                "drop_prob": 0.0,
                "bandwidth_bps": _FULL_RATE_DEMAND_BPS // 10,
                "seed": 4,
            },
            "script": script_dict(tour, 120),
        },
        {
            "name": "delay_50ms",
            "fps": 120,
            "duration_s": 5.0,
            "seed": 5,
            "link": {"delay_ms": 50.0, "jitter_ms": 0.0, "drop_prob": 0.0, "bandwidth_bps": 0, "seed": 5},
            "script": script_dict(short, 120),
        },
    ]


def write_scenarios(directory: Path = SCENARIO_DIR) -> int:
    directory.mkdir(parents=True, exist_ok=True)
    scenarios = build_scenarios()
    for sc in scenarios:
        (directory / f"{sc['name']}.json").write_text(json.dumps(sc, indent=2) + "\n", encoding="utf-8")
    return len(scenarios)
