"""Hand-frame data model, the 3D interaction box, and coordinate normalization.

Coordinate convention: origin at the sensor center, +y up, +x right,
+z toward the user. A forward poke therefore moves along -z. Units are
millimeters and microseconds everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

FINGER_NAMES = ("thumb", "index", "middle", "ring", "pinky")

# 2 ft cube, floated 100 mm above the device.
BOX_EXTENT_MM = 609.6


class FrameError(Exception):
    """Base class for frame validation failures."""


class NonMonotoneTimestamp(FrameError):
    pass


class NonFiniteComponent(FrameError):
    pass


class MalformedHand(FrameError):
    pass


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    def magnitude(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class FingerState:
    name: str
    tip: Vec3
    extended: bool


@dataclass(frozen=True)
class HandFrame:
    """One timestamped sample of hand pose.

    palm, palm_normal and fingers are present iff hand_present.
    """

    ts_us: int
    hand_present: bool
    palm: Optional[Vec3] = None
    palm_normal: Optional[Vec3] = None
    fingers: Optional[Tuple[FingerState, ...]] = None

    def finger(self, name: str) -> FingerState:
        assert self.fingers is not None
        for f in self.fingers:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def index_tip(self) -> Vec3:
        return self.finger("index").tip


@dataclass(frozen=True)
class InteractionBox:
    min_corner: Vec3
    max_corner: Vec3

    def __post_init__(self):
        if not (
            self.max_corner.x > self.min_corner.x
            and self.max_corner.y > self.min_corner.y
            and self.max_corner.z > self.min_corner.z
        ):
            raise ValueError("max_corner must exceed min_corner on every axis")

    @classmethod
    def default(cls) -> "InteractionBox":
        half = BOX_EXTENT_MM / 2.0
        return cls(
            min_corner=Vec3(-half, 100.0, -half),
            max_corner=Vec3(half, 100.0 + BOX_EXTENT_MM, half),
        )

    def extent(self) -> Vec3:
        return Vec3(
            self.max_corner.x - self.min_corner.x,
            self.max_corner.y - self.min_corner.y,
            self.max_corner.z - self.min_corner.z,
        )

    def center(self) -> Vec3:
        return Vec3(
            (self.min_corner.x + self.max_corner.x) / 2.0,
            (self.min_corner.y + self.max_corner.y) / 2.0,
            (self.min_corner.z + self.max_corner.z) / 2.0,
        )


def validate_frame(raw: HandFrame, prev_ts: int) -> HandFrame:
    """Check all HandFrame invariants; return the frame unchanged or raise.

    Rejection never mutates pipeline state: callers drop the frame and keep
    the previous timestamp watermark.
    """
    if raw.ts_us <= prev_ts:
        raise NonMonotoneTimestamp(f"ts_us {raw.ts_us} not after {prev_ts}")
    if not raw.hand_present:
        if raw.palm is not None or raw.palm_normal is not None or raw.fingers is not None:
            raise MalformedHand("hand-absent frame carries hand data")
        return raw
    if raw.palm is None or raw.palm_normal is None or raw.fingers is None:
        raise MalformedHand("hand-present frame missing palm or fingers")
    if not raw.palm.is_finite():
        raise NonFiniteComponent("palm has non-finite component")
    if not raw.palm_normal.is_finite():
        raise NonFiniteComponent("palm_normal has non-finite component")
    if abs(raw.palm_normal.magnitude() - 1.0) > 1e-6:
        raise MalformedHand("palm_normal is not a unit vector")
    names = [f.name for f in raw.fingers]
    if sorted(names) != sorted(FINGER_NAMES):
        raise MalformedHand(f"finger set {names!r} != expected five fingers")
    for f in raw.fingers:
        if not f.tip.is_finite():
            raise NonFiniteComponent(f"{f.name} tip has non-finite component")
    return raw


def normalize_point(p: Vec3, box: InteractionBox) -> Tuple[Tuple[float, float, float], bool]:
    """Map a point into [0,1]^3 box coordinates.

    Out-of-box points are clamped, not rejected; `inside` reports whether the
    point was within the box before clamping.
    """
    ext = box.extent()
    nx = (p.x - box.min_corner.x) / ext.x
    ny = (p.y - box.min_corner.y) / ext.y
    nz = (p.z - box.min_corner.z) / ext.z
    inside = 0.0 <= nx <= 1.0 and 0.0 <= ny <= 1.0 and 0.0 <= nz <= 1.0
    clamp = lambda v: 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
    return (clamp(nx), clamp(ny), clamp(nz)), inside


def denormalize_point(n: Tuple[float, float, float], box: InteractionBox) -> Vec3:
    ext = box.extent()
    return Vec3(
        box.min_corner.x + n[0] * ext.x,
        box.min_corner.y + n[1] * ext.y,
        box.min_corner.z + n[2] * ext.z,
    )
