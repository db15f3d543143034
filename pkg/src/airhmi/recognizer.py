"""Event-driven gesture state machine.

Consumes validated hand frames, keeps exclusive interaction state
(Idle / Tracking / Holding), and emits gesture events: cursor motion every
tracked frame, clicks from in-air forward pokes of the index finger, scroll
notches from circular index motion (counterclockwise up, clockwise down),
and hold/release from sustained open-hand / closed-hand postures.

Everything is a pure function of the frame stream: no wall-clock reads, so
identical streams always produce identical events and replay matches live.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, List, Optional, Tuple

from .model import HandFrame, InteractionBox, Vec3, normalize_point

Triple = Tuple[float, float, float]

CURSOR_MOVE = "cursor_move"
CLICK = "click"
HOLD_START = "hold_start"
HOLD_END = "hold_end"
SCROLL = "scroll"

DISCRETE_KINDS = (CLICK, HOLD_START, HOLD_END, SCROLL)

NOTCH_RAD = math.pi / 2          # one scroll notch per quarter revolution
_NOTCH_EPS_RAD = 0.01            # cushion at exact-multiple crossings
_FIT_WINDOW_S = 0.9              # span of the rolling circle-fit window
_FIT_MIN_SAMPLES = 12
_MAX_STEP_RAD = 0.6              # single-frame sweep beyond this is noise, not a circle
_MAX_RADIAL_DRIFT = 0.15         # per-step |radius change| / radius beyond this is not sweeping
_PURE_REL = 0.06                 # max radial residual / fitted radius the window may hold;
_PURE_ABS_MM = 1.0               # looser mixed windows would inflate the swept angle
_STABLE_MIN_S = 0.05             # fit must hold still this long before angle is booked;
                                 # transient junction "hooks" masquerade as tiny circles
_GATE_FAIL_GRACE_S = 0.06        # gates must fail this long before decay starts
_SPEED_SMOOTH_TAU_S = 0.1
_TAP_KEEP_S = 0.3                # tap window span (>= 250 ms required)


class Mode(Enum):
    IDLE = "idle"
    TRACKING = "tracking"
    HOLDING = "holding"


@dataclass(frozen=True)
class GestureEvent:
    kind: str
    ts_us: int
    norm: Optional[Triple] = None        # cursor_move, click
    direction: Optional[str] = None      # scroll: "up" | "down"
    notches: Optional[int] = None        # scroll: >= 1


@dataclass(frozen=True)
class RecognizerParams:
    """Detector thresholds; all runtime-configurable through the server config."""

    tap_travel_mm: float = 10.0
    tap_window_ms: float = 150.0
    tap_peak_speed_mm_s: float = 100.0
    tap_drift_mm: float = 8.0
    tap_refractory_ms: float = 300.0
    circle_min_radius_mm: float = 5.0
    circle_min_angular_speed_rad_s: float = 1.5
    circle_decay_ms: float = 200.0
    circle_ccw_is_up: bool = True
    hold_extended_min: int = 4
    release_extended_max: int = 1
    sustain_ms: float = 100.0


def extended_count(frame: HandFrame) -> int:
    """Number of fingers flagged extended; 0 (fist) to 5 (open hand)."""
    assert frame.hand_present and frame.fingers is not None
    return sum(1 for f in frame.fingers if f.extended)


class _CircleFit:
    """Rolling least-squares circle fit over a short sample window.

    Coordinates are shifted to the first sample so the third-order moment
    sums stay well conditioned at desk scale.
    """

    def __init__(self):
        self.win: Deque[Tuple[int, float, float]] = deque()
        self.ox = 0.0
        self.oy = 0.0
        self._s = [0.0] * 9  # su, sv, suu, svv, suv, suuu, svvv, suuv, suvv

    def reset(self):
        self.win.clear()
        self._s = [0.0] * 9

    def _apply(self, u: float, v: float, sign: float):
        s = self._s
        uu, vv = u * u, v * v
        s[0] += sign * u
        s[1] += sign * v
        s[2] += sign * uu
        s[3] += sign * vv
        s[4] += sign * u * v
        s[5] += sign * uu * u
        s[6] += sign * vv * v
        s[7] += sign * uu * v
        s[8] += sign * u * vv

    def push(self, ts_us: int, x: float, y: float):
        if not self.win:
            self.ox, self.oy = x, y
        u, v = x - self.ox, y - self.oy
        self.win.append((ts_us, u, v))
        self._apply(u, v, 1.0)
        cutoff = ts_us - int(_FIT_WINDOW_S * 1e6)
        while self.win and self.win[0][0] < cutoff:
            _, ou, ov = self.win.popleft()
            self._apply(ou, ov, -1.0)

    def pop_oldest(self):
        _, ou, ov = self.win.popleft()
        self._apply(ou, ov, -1.0)

    def solve(self) -> Optional[Tuple[float, float, float]]:
        """Fitted (center_x, center_y, radius), or None if degenerate."""
        n = len(self.win)
        if n < _FIT_MIN_SAMPLES:
            return None
        su, sv, suu, svv, suv, suuu, svvv, suuv, suvv = self._s
        mu, mv = su / n, sv / n
        cuu = suu / n - mu * mu
        cvv = svv / n - mv * mv
        cuv = suv / n - mu * mv
        cuuu = suuu / n - 3.0 * mu * suu / n + 2.0 * mu**3
        cvvv = svvv / n - 3.0 * mv * svv / n + 2.0 * mv**3
        cuvv = suvv / n - mu * svv / n - 2.0 * mv * suv / n + 2.0 * mu * mv * mv
        cvuu = suuv / n - mv * suu / n - 2.0 * mu * suv / n + 2.0 * mv * mu * mu
        det = cuu * cvv - cuv * cuv
        if not math.isfinite(det) or abs(det) < 1e-18:
            return None
        rhs_u = (cuuu + cuvv) / 2.0
        rhs_v = (cvvv + cvuu) / 2.0
        a = (rhs_u * cvv - rhs_v * cuv) / det
        b = (rhs_v * cuu - rhs_u * cuv) / det
        r2 = a * a + b * b + cuu + cvv
        if not (math.isfinite(a) and math.isfinite(b)) or r2 <= 0 or r2 > 1e12:
            return None
        return self.ox + mu + a, self.oy + mv + b, math.sqrt(r2)

    def shed_to_consistency(self) -> Optional[Tuple[float, float, float]]:
        """Drop oldest samples until the window is residual-consistent with
        one circle; returns that fit. Keeps the window a contiguous run of
        circle-compatible motion so stale pre-gesture samples never distort
        the accumulated angle."""
        while True:
            fit = self.solve()
            if fit is None:
                return None
            cx, cy, r = fit
            if self.max_residual(cx, cy, r) <= max(_PURE_REL * r, _PURE_ABS_MM):
                return fit
            if len(self.win) <= _FIT_MIN_SAMPLES:
                self.pop_oldest()
                return None
            self.pop_oldest()

    def max_residual(self, cx: float, cy: float, r: float) -> float:
        lx, ly = cx - self.ox, cy - self.oy
        worst = 0.0
        for _, u, v in self.win:
            worst = max(worst, abs(math.hypot(u - lx, v - ly) - r))
        return worst


class Recognizer:
    """Single-owner gesture state machine; call update() once per validated frame."""

    def __init__(self, box: Optional[InteractionBox] = None, params: Optional[RecognizerParams] = None):
        self.box = box or InteractionBox.default()
        self.params = params or RecognizerParams()
        self.mode = Mode.IDLE
        # tap
        self._tap_win: Deque[Tuple[int, float, float, float]] = deque()
        self._last_click_ts: Optional[int] = None
        # circle
        self._fit = _CircleFit()
        self._accum = 0.0
        self._accounted_ts: Optional[int] = None  # sweep booked up to this sample
        self._notch_count = 0
        self._notch_sign = 0
        self._gate_fail_since: Optional[int] = None
        self._decay_start: Optional[int] = None
        self._decay_from = 0.0
        self._speed_smooth = 0.0
        self._center_hist: Deque[Tuple[int, float, float]] = deque()
        # hold / release sustain timers
        self._hold_since: Optional[int] = None
        self._release_since: Optional[int] = None

    # -- lifecycle -----------------------------------------------------

    def _reset_circle(self):
        self._fit.reset()
        self._accum = 0.0
        self._accounted_ts = None
        self._notch_count = 0
        self._notch_sign = 0
        self._gate_fail_since = None
        self._decay_start = None
        self._decay_from = 0.0
        self._speed_smooth = 0.0
        self._center_hist.clear()

    def _reset_all(self):
        self._tap_win.clear()
        self._reset_circle()
        self._hold_since = None
        self._release_since = None

    def _leave(self, ts_us: int) -> List[GestureEvent]:
        # Leaving the box (or losing the hand) while holding must close the
        # hold so HoldStart/HoldEnd alternation survives.
        events: List[GestureEvent] = []
        if self.mode is Mode.HOLDING:
            events.append(GestureEvent(kind=HOLD_END, ts_us=ts_us))
        self.mode = Mode.IDLE
        self._reset_all()
        return events

    # -- detectors -----------------------------------------------------

    def _update_hold(self, ts_us: int, ext: int) -> Optional[GestureEvent]:
        p = self.params
        sustain_us = int(p.sustain_ms * 1000)
        if self.mode is Mode.TRACKING:
            self._release_since = None
            if ext >= p.hold_extended_min:
                if self._hold_since is None:
                    self._hold_since = ts_us
                elif ts_us - self._hold_since >= sustain_us:
                    self.mode = Mode.HOLDING
                    self._hold_since = None
                    return GestureEvent(kind=HOLD_START, ts_us=ts_us)
            else:
                self._hold_since = None
        elif self.mode is Mode.HOLDING:
            self._hold_since = None
            if ext <= p.release_extended_max:
                if self._release_since is None:
                    self._release_since = ts_us
                elif ts_us - self._release_since >= sustain_us:
                    self.mode = Mode.TRACKING
                    self._release_since = None
                    return GestureEvent(kind=HOLD_END, ts_us=ts_us)
            else:
                self._release_since = None
        return None

    def _gated_step(self, prev, cur, cx: float, cy: float) -> Optional[float]:
        """Signed angle step between two samples about the fitted center, or
        None if the step is not circle-like (too close, too large a jump, or
        moving radially instead of sweeping)."""
        p = self.params
        _, px, py = prev
        _, qx, qy = cur
        r1x, r1y = px - cx, py - cy
        r2x, r2y = qx - cx, qy - cy
        m1 = math.hypot(r1x, r1y)
        m2 = math.hypot(r2x, r2y)
        if m1 < p.circle_min_radius_mm or m2 < p.circle_min_radius_mm:
            return None
        if abs(m2 - m1) > _MAX_RADIAL_DRIFT * min(m1, m2):
            return None
        dth = math.atan2(r1x * r2y - r1y * r2x, r1x * r2x + r1y * r2y)
        if abs(dth) > _MAX_STEP_RAD:
            return None
        return dth

    def _update_circle(self, ts_us: int, x: float, y: float) -> List[GestureEvent]:
        p = self.params
        self._fit.push(ts_us, x, y)
        if self._accounted_ts is None:
            self._accounted_ts = ts_us

        dt = None
        if len(self._fit.win) >= 2:
            dt = (self._fit.win[-1][0] - self._fit.win[-2][0]) / 1e6

        fit = self._fit.shed_to_consistency()
        pure = False
        if fit is not None:
            cx, cy, rfit = fit
            # a real circle's fitted center holds still; transient junction
            # "hooks" masquerade as circles but their fits keep migrating, so
            # booking requires the center to have held still for a while
            hist = self._center_hist
            hist.append((ts_us, cx, cy))
            while hist and hist[0][0] < ts_us - int(2 * _STABLE_MIN_S * 1e6):
                hist.popleft()
            bound = max(0.05 * rfit, 0.5)
            span_ok = hist[0][0] <= ts_us - int(_STABLE_MIN_S * 1e6)
            drift_ok = all(math.hypot(cx - hx, cy - hy) <= bound for _, hx, hy in hist)
            pure = span_ok and drift_ok and rfit >= p.circle_min_radius_mm
        else:
            self._center_hist.clear()

        engaged = False
        if pure and dt is not None:
            # book the sweep for every sample pair not yet accounted; booking
            # waits for a pure fit so a polluted center never inflates the angle
            win = self._fit.win
            ox, oy = self._fit.ox, self._fit.oy
            start_idx = 0
            for i in range(len(win) - 1, -1, -1):
                if win[i][0] <= self._accounted_ts:
                    start_idx = i
                    break
            newest_inst = 0.0
            for i in range(start_idx + 1, len(win)):
                a = (win[i - 1][0], win[i - 1][1] + ox, win[i - 1][2] + oy)
                b = (win[i][0], win[i][1] + ox, win[i][2] + oy)
                step = self._gated_step(a, b, cx, cy)
                if step is None:
                    continue
                pair_dt = (b[0] - a[0]) / 1e6
                inst = abs(step) / pair_dt if pair_dt > 0 else 0.0
                if i == len(win) - 1:
                    newest_inst = inst
                if max(inst, self._speed_smooth) >= p.circle_min_angular_speed_rad_s:
                    self._accum += step
                    if i == len(win) - 1:
                        engaged = True
            self._accounted_ts = win[-1][0]
            alpha = dt / (_SPEED_SMOOTH_TAU_S + dt)
            self._speed_smooth += alpha * (newest_inst - self._speed_smooth)
        elif dt is not None:
            alpha = dt / (_SPEED_SMOOTH_TAU_S + dt)
            self._speed_smooth += alpha * (0.0 - self._speed_smooth)

        if engaged:
            self._gate_fail_since = None
            self._decay_start = None
        elif self._accum != 0.0:
            if self._gate_fail_since is None:
                self._gate_fail_since = ts_us
            elif ts_us - self._gate_fail_since >= int(_GATE_FAIL_GRACE_S * 1e6):
                if self._decay_start is None:
                    self._decay_start = ts_us
                    self._decay_from = self._accum
                frac = (ts_us - self._decay_start) / (p.circle_decay_ms * 1000.0)
                self._accum = self._decay_from * max(0.0, 1.0 - frac)
                if abs(self._accum) < 1e-9:
                    self._reset_circle()
                    self._fit.push(ts_us, x, y)
                    self._accounted_ts = ts_us

        return self._emit_notches(ts_us)

    def _emit_notches(self, ts_us: int) -> List[GestureEvent]:
        sign = 1 if self._accum > 0 else (-1 if self._accum < 0 else 0)
        if sign != self._notch_sign:
            self._notch_sign = sign
            self._notch_count = 0
        target = int((abs(self._accum) + _NOTCH_EPS_RAD) / NOTCH_RAD)
        events = []
        if target > self._notch_count:
            if self.params.circle_ccw_is_up:
                direction = "up" if sign > 0 else "down"
            else:
                direction = "down" if sign > 0 else "up"
            for _ in range(target - self._notch_count):
                events.append(GestureEvent(kind=SCROLL, ts_us=ts_us, direction=direction, notches=1))
            self._notch_count = target
        return events

    def _push_tap(self, ts_us: int, tip):
        self._tap_win.append((ts_us, tip.x, tip.y, tip.z))
        cutoff = ts_us - int(_TAP_KEEP_S * 1e6)
        while len(self._tap_win) > 2 and self._tap_win[0][0] < cutoff:
            self._tap_win.popleft()

    def _detect_tap(self, ts_us: int) -> Optional[GestureEvent]:
        p = self.params
        w = self._tap_win
        m = len(w) - 1
        if m < 2:
            return None
        vz_cur = (w[m][3] - w[m - 1][3]) / ((w[m][0] - w[m - 1][0]) / 1e6)
        vz_prev = (w[m - 1][3] - w[m - 2][3]) / ((w[m - 1][0] - w[m - 2][0]) / 1e6)
        if not (vz_prev < 0.0 and vz_cur > 0.0):
            return None
        if self._last_click_ts is not None and ts_us - self._last_click_ts < int(p.tap_refractory_ms * 1000):
            return None
        samples = list(w)
        # forward run: maximal contiguous stretch of -z motion ending at the apex
        peak_idx = m - 1
        onset = peak_idx
        while onset >= 1:
            dtk = (samples[onset][0] - samples[onset - 1][0]) / 1e6
            if (samples[onset][3] - samples[onset - 1][3]) / dtk < 0.0:
                onset -= 1
            else:
                break
        window_us = int(p.tap_window_ms * 1000)
        while onset < peak_idx - 1 and samples[peak_idx][0] - samples[onset][0] > window_us:
            onset += 1
        if samples[peak_idx][0] - samples[onset][0] > window_us:
            return None
        travel = samples[onset][3] - samples[peak_idx][3]
        if travel < p.tap_travel_mm:
            return None
        peak_speed = 0.0
        drift = 0.0
        ox, oy = samples[onset][1], samples[onset][2]
        for j in range(onset + 1, peak_idx + 1):
            dtk = (samples[j][0] - samples[j - 1][0]) / 1e6
            peak_speed = max(peak_speed, (samples[j - 1][3] - samples[j][3]) / dtk)
            drift = max(drift, math.hypot(samples[j][1] - ox, samples[j][2] - oy))
        if peak_speed < p.tap_peak_speed_mm_s or drift > p.tap_drift_mm:
            return None
        self._last_click_ts = ts_us
        norm, _ = normalize_point(Vec3(ox, oy, samples[onset][3]), self.box)
        return GestureEvent(kind=CLICK, ts_us=ts_us, norm=norm)

    # -- main entry ----------------------------------------------------

    def update(self, frame: HandFrame) -> List[GestureEvent]:
        """Process one validated frame; returns the events it produced."""
        ts = frame.ts_us
        if not frame.hand_present:
            return self._leave(ts)
        tip = frame.index_tip
        norm, inside = normalize_point(tip, self.box)
        if not inside:
            return self._leave(ts)
        if self.mode is Mode.IDLE:
            self.mode = Mode.TRACKING
            self._reset_all()

        events: List[GestureEvent] = [GestureEvent(kind=CURSOR_MOVE, ts_us=ts, norm=norm)]
        hold_ev = self._update_hold(ts, extended_count(frame))
        if hold_ev is not None:
            events.append(hold_ev)

        scrolls = self._update_circle(ts, tip.x, tip.y)
        self._push_tap(ts, tip)
        click = None
        if abs(self._accum) <= math.pi / 4:
            click = self._detect_tap(ts)
        if click is not None:
            events.append(click)
            self._reset_circle()
        else:
            events.extend(scrolls)
        return events
