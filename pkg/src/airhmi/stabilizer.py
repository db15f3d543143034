"""Pointer stabilization: velocity-adaptive smoothing, tremor deadzone, screen mapping.

The filter is a per-axis exponential low-pass whose cutoff rises with the
measured fingertip speed, so the cursor lags a slow hand (suppressing tremor)
but tracks a fast one closely. The deadzone then pins the cursor to an anchor
until motion breaches a small radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from .model import NonMonotoneTimestamp

Triple = Tuple[float, float, float]


@dataclass(frozen=True)
class FilterParams:
    fc_min: float = 1.0       # Hz, minimum cutoff
    beta: float = 0.5         # cutoff gain per unit speed (normalized units/s)
    gamma: float = 400.0      # quadratic cutoff gain; makes positional lag
                              # (raw - filtered) non-increasing in speed, which a
                              # purely linear gain cannot achieve
    dcutoff: float = 1.0      # Hz, cutoff of the velocity low-pass
    r_dead: float = 0.0025    # deadzone radius, normalized units (~1.5 mm in the default box)

    def __post_init__(self):
        if min(self.fc_min, self.beta, self.gamma, self.dcutoff, self.r_dead) <= 0:
            raise ValueError("all filter parameters must be strictly positive")


@dataclass(frozen=True)
class ScreenGeometry:
    width_px: int
    height_px: int

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("screen must be at least 1x1")


@dataclass(frozen=True)
class FilterState:
    smoothed: Triple
    velocity_est: Triple      # per-axis, normalized units/second
    last_ts_us: int
    deadzone_anchor: Triple
    last_raw: Triple          # velocity is differenced off the raw input, not
                              # the smoothed one, so ramps estimate true speed

    @classmethod
    def initial(cls, raw: Triple, ts_us: int) -> "FilterState":
        return cls(
            smoothed=raw,
            velocity_est=(0.0, 0.0, 0.0),
            last_ts_us=ts_us,
            deadzone_anchor=raw,
            last_raw=raw,
        )


def _alpha(fc: float, dt: float) -> float:
    r = 2.0 * math.pi * fc * dt
    return r / (r + 1.0)


def filter_update(state: FilterState, raw: Triple, ts_us: int, params: FilterParams) -> Tuple[FilterState, Triple]:
    """One smoothing step; returns (new state, filtered position)."""
    if ts_us <= state.last_ts_us:
        raise NonMonotoneTimestamp(f"filter ts {ts_us} not after {state.last_ts_us}")
    dt = (ts_us - state.last_ts_us) / 1e6

    a_d = _alpha(params.dcutoff, dt)
    smoothed = []
    vel = []
    for i in range(3):
        v_raw = (raw[i] - state.last_raw[i]) / dt
        v_hat = a_d * v_raw + (1.0 - a_d) * state.velocity_est[i]
        fc = params.fc_min + params.beta * abs(v_hat) + params.gamma * v_hat * v_hat
        a = _alpha(fc, dt)
        smoothed.append(a * raw[i] + (1.0 - a) * state.smoothed[i])
        vel.append(v_hat)
    out = (smoothed[0], smoothed[1], smoothed[2])
    new_state = FilterState(
        smoothed=out,
        velocity_est=(vel[0], vel[1], vel[2]),
        last_ts_us=ts_us,
        deadzone_anchor=state.deadzone_anchor,
        last_raw=raw,
    )
    return new_state, out


def apply_deadzone(state: FilterState, filtered: Triple, params: FilterParams) -> Tuple[FilterState, Triple]:
    """Gate sub-radius motion: hold the anchor until it is breached, then re-anchor."""
    dx = filtered[0] - state.deadzone_anchor[0]
    dy = filtered[1] - state.deadzone_anchor[1]
    if math.hypot(dx, dy) < params.r_dead:
        return state, state.deadzone_anchor
    new_state = FilterState(
        smoothed=state.smoothed,
        velocity_est=state.velocity_est,
        last_ts_us=state.last_ts_us,
        deadzone_anchor=filtered,
        last_raw=state.last_raw,
    )
    return new_state, filtered


def map_to_screen(gated: Triple, screen: ScreenGeometry) -> Tuple[int, int]:
    """Normalized box coordinates to pixels.

    Box y points up, screen y points down; z is dropped. Rounding is half-up
    so cross-language implementations agree bit-exactly.
    """
    x_px = math.floor(gated[0] * (screen.width_px - 1) + 0.5)
    y_px = math.floor((1.0 - gated[1]) * (screen.height_px - 1) + 0.5)
    x_px = min(max(x_px, 0), screen.width_px - 1)
    y_px = min(max(y_px, 0), screen.height_px - 1)
    return x_px, y_px
