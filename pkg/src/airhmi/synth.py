"""Synthetic hand-trajectory generator, recorder, and replayer.

This is the hardware replacement and the test oracle: scripts describe
gestures (dwells, lines, taps, circles, finger-posture changes, jitter), and
generation produces both the kinematically consistent frame stream and the
ground-truth labels the recognizer must reproduce. Labels are derived from
the script alone, never by running the recognizer.

Frame streams round-trip through a JSONL file format, one frame per line:

    {"ts_us":0,"hand":true,"palm":[x,y,z],"palm_normal":[0,0,-1],
     "fingers":[{"name":"thumb","tip":[x,y,z],"ext":false}, ...]}
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .model import FINGER_NAMES, FingerState, HandFrame, InteractionBox, Vec3, normalize_point
from .protocol import ProtocolError, frame_to_wire_dict, wire_dict_to_frame
from .recognizer import CLICK, HOLD_END, HOLD_START, SCROLL, GestureEvent, RecognizerParams

DEFAULT_FRAME_RATE = 120.0  # Hz, the sensor's typical capture rate
LABEL_TOL_US = 100_000      # detector latency allowance for label matching

# Three-zone feasibility relative to the recognizer defaults: comfortably
# detectable gestures get labels, comfortably-below near-misses get none, and
# anything in the grey band between is refused as ambiguous.
_TAP_MIN_DEPTH_MM = 11.0
_TAP_MISS_DEPTH_MM = 8.0
_TAP_MIN_PEAK_MM_S = 115.0
_TAP_MISS_PEAK_MM_S = 80.0
_TAP_MAX_FORWARD_S = 0.135
_CIRCLE_MIN_RADIUS_MM = 7.5
_CIRCLE_MISS_RADIUS_MM = 4.0
_CIRCLE_MIN_OMEGA = 1.8
_CIRCLE_MISS_OMEGA = 1.2
_SUSTAIN_GREY_LO_S = 0.08
_SUSTAIN_GREY_HI_S = 0.13
_APPROACH_SPEED_MM_S = 150.0

# Tremor is a mean-reverting (band-limited) Gaussian process per axis with
# stationary std = amplitude; unbounded white position noise would imply
# unphysical instantaneous velocity at high frame rates.
_JITTER_TAU_S = 0.04

# Finger-tip offsets relative to the index tip; extension is carried by the
# flags, not the geometry.
_TIP_OFFSETS = {
    "thumb": (-30.0, -25.0, 10.0),
    "index": (0.0, 0.0, 0.0),
    "middle": (12.0, 2.0, 0.0),
    "ring": (24.0, -2.0, 2.0),
    "pinky": (36.0, -8.0, 4.0),
}
_PALM_OFFSET = (8.0, -50.0, 30.0)
_DEFAULT_EXTENDED = ("index",)


class InfeasibleSegment(Exception):
    """A scripted segment cannot produce an unambiguous labeled gesture."""


class ParseError(Exception):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Label:
    """Ground-truth gesture event with a timing tolerance window."""

    kind: str
    ts_us: int
    direction: Optional[str] = None
    norm: Optional[Tuple[float, float, float]] = None
    tol_us: int = LABEL_TOL_US


@dataclass(frozen=True)
class Segment:
    kind: str
    duration_s: float = 0.0
    to: Optional[Tuple[float, float, float]] = None
    speed_mm_s: float = 0.0
    depth_mm: float = 0.0
    peak_speed_mm_s: float = 0.0
    center: Optional[Tuple[float, float, float]] = None
    radius_mm: float = 0.0
    revolutions: float = 0.0
    direction: str = ""
    angular_speed_rad_s: float = 0.0
    extended: Tuple[str, ...] = ()
    amplitude_mm: float = 0.0


@dataclass(frozen=True)
class TrajectoryScript:
    segments: Tuple[Segment, ...]
    frame_rate: float = DEFAULT_FRAME_RATE
    start: Tuple[float, float, float] = (0.0, 404.8, 0.0)  # default-box center


@dataclass(frozen=True)
class LabeledStream:
    frames: List[HandFrame]
    labels: List[Label]


def dwell(duration_s: float) -> Segment:
    return Segment(kind="dwell", duration_s=duration_s)


def line(to: Tuple[float, float, float], speed_mm_s: float) -> Segment:
    return Segment(kind="line", to=to, speed_mm_s=speed_mm_s)


def tap(depth_mm: float, peak_speed_mm_s: float) -> Segment:
    return Segment(kind="tap", depth_mm=depth_mm, peak_speed_mm_s=peak_speed_mm_s)


def circle(center, radius_mm, revolutions, direction, angular_speed_rad_s) -> Segment:
    return Segment(
        kind="circle",
        center=tuple(center),
        radius_mm=radius_mm,
        revolutions=revolutions,
        direction=direction,
        angular_speed_rad_s=angular_speed_rad_s,
    )


def set_fingers(extended: Sequence[str]) -> Segment:
    return Segment(kind="set_fingers", extended=tuple(extended))


def jitter(amplitude_mm: float, duration_s: float) -> Segment:
    return Segment(kind="jitter", amplitude_mm=amplitude_mm, duration_s=duration_s)


# -- script (de)serialization -----------------------------------------------


def segment_to_dict(seg: Segment) -> dict:
    d: dict = {"kind": seg.kind}
    if seg.kind == "dwell":
        d["duration_s"] = seg.duration_s
    elif seg.kind == "line":
        d["to"] = list(seg.to)
        d["speed_mm_s"] = seg.speed_mm_s
    elif seg.kind == "tap":
        d["depth_mm"] = seg.depth_mm
        d["peak_speed_mm_s"] = seg.peak_speed_mm_s
    elif seg.kind == "circle":
        d["center"] = list(seg.center)
        d["radius_mm"] = seg.radius_mm
        d["revolutions"] = seg.revolutions
        d["direction"] = seg.direction
        d["angular_speed_rad_s"] = seg.angular_speed_rad_s
    elif seg.kind == "set_fingers":
        d["extended"] = list(seg.extended)
    elif seg.kind == "jitter":
        d["amplitude_mm"] = seg.amplitude_mm
        d["duration_s"] = seg.duration_s
    else:
        raise ValueError(f"unknown segment kind {seg.kind!r}")
    return d


def segment_from_dict(d: dict) -> Segment:
    kind = d.get("kind")
    if kind == "dwell":
        return dwell(float(d["duration_s"]))
    if kind == "line":
        return line(tuple(float(c) for c in d["to"]), float(d["speed_mm_s"]))
    if kind == "tap":
        return tap(float(d["depth_mm"]), float(d["peak_speed_mm_s"]))
    if kind == "circle":
        return circle(
            tuple(float(c) for c in d["center"]),
            float(d["radius_mm"]),
            float(d["revolutions"]),
            str(d["direction"]),
            float(d["angular_speed_rad_s"]),
        )
    if kind == "set_fingers":
        return set_fingers([str(n) for n in d["extended"]])
    if kind == "jitter":
        return jitter(float(d["amplitude_mm"]), float(d["duration_s"]))
    raise ValueError(f"unknown segment kind {kind!r}")


def script_to_json(script: TrajectoryScript) -> str:
    return json.dumps(
        {
            "frame_rate": script.frame_rate,
            "start": list(script.start),
            "segments": [segment_to_dict(s) for s in script.segments],
        },
        indent=2,
    )


def script_from_json(text: str) -> TrajectoryScript:
    obj = json.loads(text)
    if isinstance(obj, list):  # bare segment array, defaults elsewhere
        segs = obj
        rate = DEFAULT_FRAME_RATE
        start = (0.0, 404.8, 0.0)
    else:
        segs = obj["segments"]
        rate = float(obj.get("frame_rate", DEFAULT_FRAME_RATE))
        start = tuple(float(c) for c in obj.get("start", (0.0, 404.8, 0.0)))
    return TrajectoryScript(
        segments=tuple(segment_from_dict(s) for s in segs), frame_rate=rate, start=start
    )


def load_script(path) -> TrajectoryScript:
    with open(path, "r", encoding="utf-8") as fh:
        return script_from_json(fh.read())


# -- generation ---------------------------------------------------------------


@dataclass
class _Piece:
    t0: float
    t1: float
    pos: Callable[[float], Tuple[float, float, float]]  # local time -> mm
    jitter_mm: float = 0.0


def _tap_profile(start, depth_mm, forward_s):
    sx, sy, sz = start

    def pos(lt: float):
        if lt <= forward_s:
            s = depth_mm * (1.0 - math.cos(math.pi * lt / forward_s)) / 2.0
        else:
            back = min(lt - forward_s, forward_s)
            s = depth_mm * (1.0 + math.cos(math.pi * back / forward_s)) / 2.0
        return (sx, sy, sz - s)

    return pos


def generate(
    script: TrajectoryScript,
    seed: int = 0,
    box: Optional[InteractionBox] = None,
    params: Optional[RecognizerParams] = None,
) -> LabeledStream:
    """Expand a script into frames plus ground-truth labels.

    Raises InfeasibleSegment rather than emitting a stream whose labels would
    be ambiguous under the documented detector thresholds.
    """
    box = box or InteractionBox.default()
    params = params or RecognizerParams()
    rng = random.Random(seed)
    rate = script.frame_rate
    if rate <= 0:
        raise InfeasibleSegment("frame_rate must be positive")

    pieces: List[_Piece] = []
    labels: List[Label] = []
    finger_changes: List[Tuple[float, Tuple[str, ...]]] = [(0.0, _DEFAULT_EXTENDED)]
    pen = tuple(script.start)
    t = 0.0
    last_click_t: Optional[float] = None

    def hold_pen(t0, t1):
        p = pen
        return _Piece(t0, t1, lambda lt, p=p: p)

    for i, seg in enumerate(script.segments):
        where = f"segment {i} ({seg.kind})"
        if seg.kind == "dwell":
            if seg.duration_s <= 0:
                raise InfeasibleSegment(f"{where}: duration must be positive")
            pieces.append(hold_pen(t, t + seg.duration_s))
            t += seg.duration_s
        elif seg.kind == "line":
            if seg.speed_mm_s <= 0:
                raise InfeasibleSegment(f"{where}: speed must be positive")
            p0, p1 = pen, tuple(seg.to)
            dist = math.dist(p0, p1)
            dur = dist / seg.speed_mm_s if dist > 0 else 0.0
            if dur > 0:
                pieces.append(
                    _Piece(
                        t,
                        t + dur,
                        lambda lt, p0=p0, p1=p1, dur=dur: tuple(
                            a + (b - a) * (lt / dur) for a, b in zip(p0, p1)
                        ),
                    )
                )
            pen = p1
            t += dur
        elif seg.kind == "tap":
            # a near-miss poke is silent only when clearly below the travel or
            # speed bound; the grey band between is ambiguous and refused
            miss = seg.depth_mm <= _TAP_MISS_DEPTH_MM or seg.peak_speed_mm_s <= _TAP_MISS_PEAK_MM_S
            forward_s = math.pi * seg.depth_mm / (2.0 * seg.peak_speed_mm_s)
            if not miss:
                if seg.depth_mm < _TAP_MIN_DEPTH_MM:
                    raise InfeasibleSegment(
                        f"{where}: depth {seg.depth_mm} mm is ambiguously close to the travel bound"
                    )
                if seg.peak_speed_mm_s < _TAP_MIN_PEAK_MM_S:
                    raise InfeasibleSegment(
                        f"{where}: peak speed {seg.peak_speed_mm_s} is ambiguously close to the speed bound"
                    )
                if forward_s > _TAP_MAX_FORWARD_S:
                    raise InfeasibleSegment(
                        f"{where}: peak speed too low to reach {seg.depth_mm} mm within the tap window"
                    )
            if last_click_t is not None and (t + forward_s) - last_click_t < (
                params.tap_refractory_ms / 1000.0 + 0.05
            ):
                raise InfeasibleSegment(f"{where}: tap lands inside the refractory period")
            pieces.append(_Piece(t, t + 2 * forward_s, _tap_profile(pen, seg.depth_mm, forward_s)))
            if not miss:
                click_t = t + forward_s
                norm, inside = normalize_point(Vec3(*pen), box)
                if not inside:
                    raise InfeasibleSegment(f"{where}: tap position outside the interaction box")
                labels.append(Label(kind=CLICK, ts_us=round(click_t * 1e6), norm=norm))
                last_click_t = click_t
            t += 2 * forward_s
        elif seg.kind == "circle":
            miss = (
                seg.radius_mm <= _CIRCLE_MISS_RADIUS_MM
                or seg.angular_speed_rad_s <= _CIRCLE_MISS_OMEGA
            )
            if not miss:
                if seg.radius_mm < _CIRCLE_MIN_RADIUS_MM:
                    raise InfeasibleSegment(
                        f"{where}: radius {seg.radius_mm} mm is ambiguously close to the radius bound"
                    )
                if seg.angular_speed_rad_s < _CIRCLE_MIN_OMEGA:
                    raise InfeasibleSegment(
                        f"{where}: angular speed is ambiguously close to the speed bound"
                    )
            if seg.angular_speed_rad_s / rate > 0.45:
                raise InfeasibleSegment(f"{where}: angular speed too high for the frame rate")
            if seg.direction not in ("cw", "ccw"):
                raise InfeasibleSegment(f"{where}: direction must be cw or ccw")
            if seg.revolutions <= 0:
                raise InfeasibleSegment(f"{where}: revolutions must be positive")
            cx, cy, cz = seg.center
            dx, dy = pen[0] - cx, pen[1] - cy
            theta0 = math.atan2(dy, dx) if math.hypot(dx, dy) > 1e-9 else 0.0
            start_pt = (cx + seg.radius_mm * math.cos(theta0), cy + seg.radius_mm * math.sin(theta0), cz)
            approach = math.dist(pen, start_pt)
            if approach > 1e-9:
                dur = approach / _APPROACH_SPEED_MM_S
                p0 = pen
                pieces.append(
                    _Piece(
                        t,
                        t + dur,
                        lambda lt, p0=p0, p1=start_pt, dur=dur: tuple(
                            a + (b - a) * (lt / dur) for a, b in zip(p0, p1)
                        ),
                    )
                )
                t += dur
            sweep = 2.0 * math.pi * seg.revolutions
            omega = seg.angular_speed_rad_s
            sgn = 1.0 if seg.direction == "ccw" else -1.0
            dur = sweep / omega

            def cpos(lt, cx=cx, cy=cy, cz=cz, r=seg.radius_mm, th0=theta0, om=omega, sg=sgn):
                th = th0 + sg * om * lt
                return (cx + r * math.cos(th), cy + r * math.sin(th), cz)

            pieces.append(_Piece(t, t + dur, cpos))
            if not miss:
                notch_dir = "up" if seg.direction == "ccw" else "down"
                n_notches = int(math.floor(4.0 * seg.revolutions + 1e-9))
                for k in range(1, n_notches + 1):
                    labels.append(
                        Label(
                            kind=SCROLL,
                            ts_us=round((t + k * (math.pi / 2.0) / omega) * 1e6),
                            direction=notch_dir,
                        )
                    )
            pen = cpos(dur)
            t += dur
        elif seg.kind == "set_fingers":
            bad = set(seg.extended) - set(FINGER_NAMES)
            if bad:
                raise InfeasibleSegment(f"{where}: unknown finger name(s) {sorted(bad)}")
            finger_changes.append((t, tuple(seg.extended)))
        elif seg.kind == "jitter":
            if seg.duration_s <= 0 or seg.amplitude_mm < 0:
                raise InfeasibleSegment(f"{where}: bad jitter parameters")
            p = pen
            pieces.append(_Piece(t, t + seg.duration_s, lambda lt, p=p: p, jitter_mm=seg.amplitude_mm))
            t += seg.duration_s
        else:
            raise InfeasibleSegment(f"{where}: unknown segment kind")

    total = t
    if total <= 0:
        raise InfeasibleSegment("script has zero duration")

    # hold/release labels from the finger-posture timeline
    labels.extend(_hold_labels(finger_changes, total, params, rate))
    labels.sort(key=lambda lab: lab.ts_us)

    frames: List[HandFrame] = []
    n_frames = int(math.floor(total * rate)) + 1
    piece_idx = 0
    change_idx = 0
    extended = finger_changes[0][1]
    rho = math.exp(-1.0 / (rate * _JITTER_TAU_S))
    innov = math.sqrt(1.0 - rho * rho)
    jit_piece: Optional[_Piece] = None
    jit = [0.0, 0.0, 0.0]
    for k in range(n_frames):
        tk = k / rate
        ts_us = round(k * 1e6 / rate)
        while piece_idx < len(pieces) - 1 and tk >= pieces[piece_idx].t1:
            piece_idx += 1
        piece = pieces[piece_idx]
        lt = min(max(tk - piece.t0, 0.0), piece.t1 - piece.t0)
        x, y, z = piece.pos(lt)
        if piece.jitter_mm > 0:
            if jit_piece is not piece:
                jit_piece = piece
                jit = [rng.gauss(0.0, piece.jitter_mm) for _ in range(3)]
            else:
                jit = [rho * j + innov * rng.gauss(0.0, piece.jitter_mm) for j in jit]
            x += jit[0]
            y += jit[1]
            z += jit[2]
        while change_idx + 1 < len(finger_changes) and tk >= finger_changes[change_idx + 1][0]:
            change_idx += 1
            extended = finger_changes[change_idx][1]
        frames.append(_make_frame(ts_us, (x, y, z), extended))
        _, inside = normalize_point(Vec3(x, y, z), box)
        if not inside:
            raise InfeasibleSegment(f"trajectory leaves the interaction box at t={tk:.3f}s")
    return LabeledStream(frames=frames, labels=labels)


def _hold_labels(
    changes: List[Tuple[float, Tuple[str, ...]]],
    total: float,
    params: RecognizerParams,
    rate: float,
) -> List[Label]:
    labels: List[Label] = []
    holding = False
    sustain_s = params.sustain_ms / 1000.0
    for i, (tc, ext) in enumerate(changes):
        n_ext = len(ext)
        until = changes[i + 1][0] if i + 1 < len(changes) else total
        span = until - tc
        if not holding and n_ext >= params.hold_extended_min:
            if span >= _SUSTAIN_GREY_HI_S:
                labels.append(Label(kind=HOLD_START, ts_us=round((tc + sustain_s) * 1e6)))
                holding = True
            elif span > _SUSTAIN_GREY_LO_S:
                raise InfeasibleSegment(
                    f"open-hand posture held {span * 1e3:.0f} ms is ambiguously close to the sustain bound"
                )
        elif holding and n_ext <= params.release_extended_max:
            if span >= _SUSTAIN_GREY_HI_S:
                labels.append(Label(kind=HOLD_END, ts_us=round((tc + sustain_s) * 1e6)))
                holding = False
            elif span > _SUSTAIN_GREY_LO_S:
                raise InfeasibleSegment(
                    f"closed-hand posture held {span * 1e3:.0f} ms is ambiguously close to the sustain bound"
                )
    return labels


def _make_frame(ts_us: int, index_tip, extended: Tuple[str, ...]) -> HandFrame:
    x, y, z = index_tip
    palm = Vec3(x + _PALM_OFFSET[0], y + _PALM_OFFSET[1], z + _PALM_OFFSET[2])
    fingers = tuple(
        FingerState(
            name=name,
            tip=Vec3(x + _TIP_OFFSETS[name][0], y + _TIP_OFFSETS[name][1], z + _TIP_OFFSETS[name][2]),
            extended=name in extended,
        )
        for name in FINGER_NAMES
    )
    return HandFrame(
        ts_us=ts_us,
        hand_present=True,
        palm=palm,
        palm_normal=Vec3(0.0, 0.0, -1.0),
        fingers=fingers,
    )


# -- record / replay ----------------------------------------------------------


def record(frames: Sequence[HandFrame], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(json.dumps(frame_to_wire_dict(frame), separators=(",", ":")) + "\n")


def replay(path) -> List[HandFrame]:
    frames: List[HandFrame] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
                if not isinstance(obj, dict):
                    raise ProtocolError("frame line must be a JSON object")
                frames.append(wire_dict_to_frame(obj))
            except (json.JSONDecodeError, ProtocolError) as e:
                raise ParseError(line_no, str(e)) from None
    return frames


# -- label matching ------------------------------------------------------------


def match_labels(events: Sequence[GestureEvent], labels: Sequence[Label]) -> Tuple[bool, str]:
    """Compare recognizer output against ground truth.

    Discrete events must agree in kind, count, direction and order, with each
    timestamp inside its label's tolerance window. Cursor moves are ignored.
    """
    discrete = [e for e in events if e.kind != "cursor_move"]
    if len(discrete) != len(labels):
        got = [(e.kind, e.direction) for e in discrete]
        want = [(lab.kind, lab.direction) for lab in labels]
        return False, f"event count mismatch: got {len(discrete)} {got}, want {len(labels)} {want}"
    for i, (ev, lab) in enumerate(zip(discrete, labels)):
        if ev.kind != lab.kind:
            return False, f"event {i}: kind {ev.kind} != {lab.kind}"
        if lab.direction is not None and ev.direction != lab.direction:
            return False, f"event {i}: direction {ev.direction} != {lab.direction}"
        if abs(ev.ts_us - lab.ts_us) > lab.tol_us:
            return False, (
                f"event {i} ({ev.kind}): ts {ev.ts_us} outside {lab.ts_us} +/- {lab.tol_us}"
            )
    return True, "ok"
