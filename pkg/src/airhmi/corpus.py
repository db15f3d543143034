"""Bundled gesture-script corpus: the oracle-equivalence test set.

53 scripts checked into the package as JSON: 20 taps across depths and
speeds, 12 circles (both directions, 1-3 revolutions, radii 10-40 mm),
6 drag sequences, 10 tremor-only streams, and 5 adversarial near-misses
that must produce no events at all.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterator, List, Tuple

from .synth import (
    Segment,
    TrajectoryScript,
    circle,
    dwell,
    jitter,
    line,
    script_from_json,
    script_to_json,
    set_fingers,
    tap,
)

CORPUS_DIR = Path(__file__).parent / "corpus"

_CY = 404.8  # default-box center height
_OPEN = ("thumb", "index", "middle", "ring", "pinky")
_FIST: Tuple[str, ...] = ()


def _tap_scripts() -> List[Tuple[str, TrajectoryScript, int]]:
    # every pair keeps the forward stroke within the detector's time window
    pairs = [
        (12.0, 150.0), (12.0, 200.0), (12.0, 300.0), (12.0, 400.0),
        (13.0, 170.0), (14.0, 180.0), (14.0, 260.0), (14.0, 400.0),
        (15.0, 200.0), (15.0, 280.0), (15.0, 400.0),
        (16.0, 220.0), (16.0, 330.0),
        (18.0, 230.0), (18.0, 360.0),
        (20.0, 250.0), (20.0, 400.0),
        (22.0, 280.0),
        (25.0, 310.0), (25.0, 400.0),
    ]
    out = []
    starts = [(0.0, _CY, 0.0), (-120.0, 330.0, 60.0), (90.0, 500.0, -40.0)]
    rates = [120.0, 120.0, 90.0, 200.0]
    for i, (depth, speed) in enumerate(pairs):
        script = TrajectoryScript(
            segments=(dwell(0.6), tap(depth, speed), dwell(0.6)),
            frame_rate=rates[i % len(rates)],
            start=starts[i % len(starts)],
        )
        out.append((f"tap_{i:02d}_d{depth:g}_v{speed:g}", script, 10 + i))
    return out


def _circle_scripts() -> List[Tuple[str, TrajectoryScript, int]]:
    combos = [
        ("ccw", 1.0, 15.0, 2.0 * math.pi),
        ("ccw", 1.0, 30.0, 1.5 * math.pi),
        ("ccw", 2.0, 10.0, 2.5 * math.pi),
        ("ccw", 2.0, 30.0, 2.0 * math.pi),
        ("ccw", 3.0, 20.0, 3.0 * math.pi),
        ("ccw", 1.5, 40.0, 2.0 * math.pi),
        ("cw", 1.0, 15.0, 2.0 * math.pi),
        ("cw", 1.0, 40.0, 1.5 * math.pi),
        ("cw", 2.0, 20.0, 2.5 * math.pi),
        ("cw", 2.0, 30.0, 2.0 * math.pi),
        ("cw", 3.0, 20.0, 3.0 * math.pi),
        ("cw", 1.5, 10.0, 2.0 * math.pi),
    ]
    out = []
    for i, (direction, rev, radius, omega) in enumerate(combos):
        start = (0.0, _CY, 0.0)
        center = (start[0] - radius, start[1], start[2])  # start point on the rim
        script = TrajectoryScript(
            segments=(dwell(0.4), circle(center, radius, rev, direction, omega), dwell(0.4)),
            start=start,
        )
        out.append((f"circle_{i:02d}_{direction}_rev{rev:g}_r{radius:g}", script, 40 + i))
    return out


def _drag_scripts() -> List[Tuple[str, TrajectoryScript, int]]:
    targets = [
        ((120.0, _CY, 0.0), 150.0),
        ((-100.0, _CY + 60.0, 0.0), 120.0),
        ((60.0, _CY - 90.0, 0.0), 200.0),
        ((0.0, _CY + 140.0, 0.0), 100.0),
        ((-150.0, _CY - 40.0, 30.0), 180.0),
        ((140.0, _CY + 80.0, -30.0), 250.0),
    ]
    out = []
    for i, (to, speed) in enumerate(targets):
        script = TrajectoryScript(
            segments=(
                dwell(0.5),
                set_fingers(_OPEN),
                dwell(0.3),
                line(to, speed),
                set_fingers(_FIST),
                dwell(0.3),
                set_fingers(("index",)),
                dwell(0.3),
            ),
        )
        out.append((f"drag_{i:02d}", script, 70 + i))
    return out


def _jitter_scripts() -> List[Tuple[str, TrajectoryScript, int]]:
    # amplitudes at physiological tremor scale; all far below the 2 mm
    # recognizer-silence bound and small enough for the deadzone to pin
    amps = [0.15, 0.2, 0.22, 0.25, 0.28, 0.3, 0.32, 0.35, 0.38, 0.4]
    out = []
    for i, amp in enumerate(amps):
        script = TrajectoryScript(segments=(jitter(amp, 10.0),))
        out.append((f"jitter_{i:02d}_a{amp:g}", script, 101 + i))
    return out


def _adversarial_scripts() -> List[Tuple[str, TrajectoryScript, int]]:
    out = [
        # slow push: deep but far below the speed bound
        ("miss_slow_push", TrajectoryScript(segments=(dwell(0.5), tap(20.0, 30.0), dwell(0.5)))),
        # shallow stab: fast but below the travel bound
        ("miss_shallow_tap", TrajectoryScript(segments=(dwell(0.5), tap(7.0, 300.0), dwell(0.5)))),
        # micro circle: under the radius bound
        ("miss_tiny_circle", TrajectoryScript(
            segments=(dwell(0.4), circle((-3.0, _CY, 0.0), 3.0, 2.0, "ccw", 2.0 * math.pi), dwell(0.4)),
        )),
        # lazy circle: under the angular-speed bound
        ("miss_slow_circle", TrajectoryScript(
            segments=(dwell(0.4), circle((-25.0, _CY, 0.0), 25.0, 1.0, "cw", 1.0), dwell(0.4)),
        )),
        # open-hand flash: shorter than the sustain timer
        ("miss_hold_flash", TrajectoryScript(
            segments=(dwell(0.5), set_fingers(_OPEN), dwell(0.05), set_fingers(("index",)), dwell(0.5)),
        )),
    ]
    return [(name, script, 200 + i) for i, (name, script) in enumerate(out)]


def build_corpus() -> List[Tuple[str, TrajectoryScript, int]]:
    """All (name, script, seed) entries, 53 total."""
    entries: List[Tuple[str, TrajectoryScript, int]] = []
    entries.extend(_tap_scripts())
    entries.extend(_circle_scripts())
    entries.extend(_drag_scripts())
    entries.extend(_jitter_scripts())
    entries.extend(_adversarial_scripts())
    return entries


def write_corpus(directory: Path = CORPUS_DIR) -> int:
    directory.mkdir(parents=True, exist_ok=True)
    entries = build_corpus()
    for name, script, seed in entries:
        obj = json.loads(script_to_json(script))
        obj["name"] = name
        obj["seed"] = seed
        (directory / f"{name}.json").write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    return len(entries)


def iter_corpus(directory: Path = CORPUS_DIR) -> Iterator[Tuple[str, TrajectoryScript, int]]:
    """Yield (name, script, seed) from the checked-in corpus files."""
    paths = sorted(directory.glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no corpus files under {directory}")
    for path in paths:
        obj = json.loads(path.read_text(encoding="utf-8"))
        script = script_from_json(json.dumps(obj))
        yield obj.get("name", path.stem), script, int(obj.get("seed", 0))
