"""Wire protocol: compact JSON command/frame messages plus a lossy-link simulator.

One UTF-8 JSON object per WebSocket text message. Commands flow server to
client on `/cursor`; frame feeds flow UI to server on `/feed`; clients
announce themselves with a hello. Decoding is strict: unknown kinds, missing
or unexpected fields, and out-of-range values are all rejected (non-fatally;
callers log and skip).

Number canonicalization: integral floats are written as integers and -0.0 is
folded to 0, so independently written encoders can produce byte-identical
output for the same values.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from .model import FINGER_NAMES, FingerState, HandFrame, Vec3

COMMAND_KINDS = ("move", "click", "hold", "release", "scroll")
SCROLL_DIRECTIONS = ("up", "down")


class ProtocolError(Exception):
    """Base class for message rejection; never fatal to a connection."""


class InvalidMessage(ProtocolError):
    """Raised by encode() when a message violates its own invariants."""


class UnknownKind(ProtocolError):
    pass


class MissingField(ProtocolError):
    """Field set does not match the kind (missing or unexpected fields)."""


class RangeError(ProtocolError):
    """A field value is outside its allowed domain or has the wrong type."""


@dataclass(frozen=True)
class CommandMessage:
    t: str
    seq: int
    ts_us: int
    x: Optional[int] = None
    y: Optional[int] = None
    dir: Optional[str] = None
    n: Optional[int] = None


@dataclass(frozen=True)
class FrameMessage:
    frame: HandFrame


@dataclass(frozen=True)
class HelloMessage:
    role: str
    name: str


Message = Union[CommandMessage, FrameMessage, HelloMessage]


def _canon_num(v: float) -> Union[int, float]:
    # integral floats go out as integers; -0.0 folds to 0
    v = v + 0.0
    if v == int(v) and abs(v) < 2**53:
        return int(v)
    return v


def _vec3_wire(v: Vec3) -> List[Union[int, float]]:
    return [_canon_num(v.x), _canon_num(v.y), _canon_num(v.z)]


def frame_to_wire_dict(frame: HandFrame) -> dict:
    """Frame serialization shared by the wire format and the JSONL file format."""
    d: dict = {"ts_us": frame.ts_us, "hand": frame.hand_present}
    if frame.hand_present:
        d["palm"] = _vec3_wire(frame.palm)
        d["palm_normal"] = _vec3_wire(frame.palm_normal)
        d["fingers"] = [
            {"name": f.name, "tip": _vec3_wire(f.tip), "ext": f.extended} for f in frame.fingers
        ]
    return d


def _require_int(obj: dict, key: str, minimum: int = 0) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise RangeError(f"{key} must be an integer, got {v!r}")
    if v < minimum:
        raise RangeError(f"{key} must be >= {minimum}, got {v}")
    return v


def _require_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RangeError(f"{what} must be a number, got {value!r}")
    f = float(value)
    if not math.isfinite(f):
        raise RangeError(f"{what} must be finite")
    return f


def _require_keys(obj: dict, expected: Tuple[str, ...], kind: str) -> None:
    keys = set(obj.keys())
    exp = set(expected)
    missing = exp - keys
    if missing:
        raise MissingField(f"{kind} message missing field(s) {sorted(missing)}")
    extra = keys - exp
    if extra:
        raise MissingField(f"{kind} message has unexpected field(s) {sorted(extra)}")


def _vec3_from_wire(value, what: str) -> Vec3:
    if not isinstance(value, list) or len(value) != 3:
        raise RangeError(f"{what} must be a 3-element array")
    return Vec3(*(_require_number(c, f"{what}[{i}]") for i, c in enumerate(value)))


def wire_dict_to_frame(obj: dict, *, extra_keys: Tuple[str, ...] = ()) -> HandFrame:
    if "hand" not in obj:
        raise MissingField("frame message missing field(s) ['hand']")
    hand = obj["hand"]
    if not isinstance(hand, bool):
        raise RangeError(f"hand must be a boolean, got {hand!r}")
    if hand:
        _require_keys(obj, extra_keys + ("ts_us", "hand", "palm", "palm_normal", "fingers"), "frame")
    else:
        _require_keys(obj, extra_keys + ("ts_us", "hand"), "frame")
    ts_us = _require_int(obj, "ts_us")
    if not hand:
        return HandFrame(ts_us=ts_us, hand_present=False)
    palm = _vec3_from_wire(obj["palm"], "palm")
    palm_normal = _vec3_from_wire(obj["palm_normal"], "palm_normal")
    raw_fingers = obj["fingers"]
    if not isinstance(raw_fingers, list) or len(raw_fingers) != len(FINGER_NAMES):
        raise RangeError("fingers must be a 5-element array")
    fingers = []
    for entry in raw_fingers:
        if not isinstance(entry, dict):
            raise RangeError("finger entry must be an object")
        _require_keys(entry, ("name", "tip", "ext"), "finger")
        name = entry["name"]
        if name not in FINGER_NAMES:
            raise RangeError(f"unknown finger name {name!r}")
        if not isinstance(entry["ext"], bool):
            raise RangeError("finger ext must be a boolean")
        fingers.append(FingerState(name=name, tip=_vec3_from_wire(entry["tip"], "tip"), extended=entry["ext"]))
    if len({f.name for f in fingers}) != len(FINGER_NAMES):
        raise RangeError("duplicate finger names")
    return HandFrame(ts_us=ts_us, hand_present=True, palm=palm, palm_normal=palm_normal, fingers=tuple(fingers))


def _check_command(msg: CommandMessage) -> None:
    if msg.t not in COMMAND_KINDS:
        raise InvalidMessage(f"unknown command kind {msg.t!r}")
    if msg.seq < 0 or msg.ts_us < 0:
        raise InvalidMessage("seq and ts_us must be non-negative")
    needs_xy = msg.t in ("move", "click")
    if needs_xy != (msg.x is not None and msg.y is not None):
        raise InvalidMessage(f"{msg.t} requires x/y exactly when move or click")
    if needs_xy and (msg.x < 0 or msg.y < 0):
        raise InvalidMessage("pixel coordinates must be non-negative")
    is_scroll = msg.t == "scroll"
    if is_scroll != (msg.dir is not None and msg.n is not None):
        raise InvalidMessage("scroll requires dir/n exactly when scroll")
    if is_scroll and (msg.dir not in SCROLL_DIRECTIONS or msg.n < 1):
        raise InvalidMessage("scroll dir must be up/down and n >= 1")
    if not needs_xy and (msg.x is not None or msg.y is not None):
        raise InvalidMessage(f"{msg.t} must not carry x/y")
    if not is_scroll and (msg.dir is not None or msg.n is not None):
        raise InvalidMessage(f"{msg.t} must not carry dir/n")


def encode(msg: Message) -> bytes:
    """Serialize a message to one compact JSON object; decode(encode(m)) == m."""
    if isinstance(msg, CommandMessage):
        _check_command(msg)
        d: dict = {"t": msg.t}
        if msg.t in ("move", "click"):
            d["x"] = msg.x
            d["y"] = msg.y
        elif msg.t == "scroll":
            d["dir"] = msg.dir
            d["n"] = msg.n
        d["seq"] = msg.seq
        d["ts_us"] = msg.ts_us
    elif isinstance(msg, FrameMessage):
        d = {"t": "frame"}
        d.update(frame_to_wire_dict(msg.frame))
    elif isinstance(msg, HelloMessage):
        d = {"t": "hello", "role": msg.role, "name": msg.name}
    else:
        raise InvalidMessage(f"cannot encode {type(msg).__name__}")
    return json.dumps(d, separators=(",", ":"), allow_nan=False).encode("utf-8")


def _reject_constant(name):
    raise RangeError(f"non-finite JSON constant {name}")


def decode(data: Union[bytes, str]) -> Message:
    """Strict parse of one wire message.

    Raises UnknownKind / MissingField / RangeError; all are non-fatal and the
    caller is expected to log and skip the message.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise RangeError(f"invalid UTF-8: {e}") from None
    try:
        obj = json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise MissingField(f"not a JSON object: {e}") from None
    if not isinstance(obj, dict):
        raise MissingField("top-level JSON value must be an object")
    t = obj.get("t")
    if t is None:
        raise MissingField("message missing field(s) ['t']")
    if t == "frame":
        frame = wire_dict_to_frame(obj, extra_keys=("t",))
        return FrameMessage(frame=frame)
    if t == "hello":
        _require_keys(obj, ("t", "role", "name"), "hello")
        if not isinstance(obj["role"], str) or not isinstance(obj["name"], str):
            raise RangeError("hello role and name must be strings")
        return HelloMessage(role=obj["role"], name=obj["name"])
    if t not in COMMAND_KINDS:
        raise UnknownKind(f"unknown message kind {t!r}")
    if t in ("move", "click"):
        _require_keys(obj, ("t", "x", "y", "seq", "ts_us"), t)
        x = _require_int(obj, "x")
        y = _require_int(obj, "y")
        return CommandMessage(t=t, x=x, y=y, seq=_require_int(obj, "seq"), ts_us=_require_int(obj, "ts_us"))
    if t == "scroll":
        _require_keys(obj, ("t", "dir", "n", "seq", "ts_us"), t)
        direction = obj["dir"]
        if direction not in SCROLL_DIRECTIONS:
            raise RangeError(f"scroll dir must be one of {SCROLL_DIRECTIONS}, got {direction!r}")
        n = _require_int(obj, "n", minimum=1)
        return CommandMessage(t=t, dir=direction, n=n, seq=_require_int(obj, "seq"), ts_us=_require_int(obj, "ts_us"))
    # hold / release
    _require_keys(obj, ("t", "seq", "ts_us"), t)
    return CommandMessage(t=t, seq=_require_int(obj, "seq"), ts_us=_require_int(obj, "ts_us"))


@dataclass(frozen=True)
class LinkParams:
    delay_ms: float = 0.0
    jitter_ms: float = 0.0
    drop_prob: float = 0.0
    bandwidth_bps: int = 0    # bytes/second cap; 0 = unlimited
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.drop_prob <= 1.0):
            raise ValueError("drop_prob must be in [0,1]")
        if self.delay_ms < 0 or self.jitter_ms < 0 or self.bandwidth_bps < 0:
            raise ValueError("delays and bandwidth must be non-negative")


class LinkSimulator:
    """Deterministic lossy-link scheduler.

    Pure scheduling: transmit() decides drop-or-deliver and returns the
    delivery time in microseconds. Deliveries preserve send order (FIFO),
    and a bandwidth cap serializes payloads through a single line.

    drop_prob is an attribute so tests can script outage windows; the RNG
    draw order (drop first, then jitter) is fixed, so a given (seed, message
    timeline, parameter schedule) always yields the same delivery timeline.
    """

    def __init__(self, params: LinkParams):
        self.params = params
        self.drop_prob = params.drop_prob
        self._rng = random.Random(params.seed)
        self._line_free_at_us = 0
        self._last_deliver_at_us = 0
        self.sent = 0
        self.dropped = 0

    def transmit(self, payload: bytes, now_us: int) -> Optional[int]:
        """Schedule one payload; returns deliver_at_us, or None if dropped."""
        self.sent += 1
        if self._rng.random() < self.drop_prob:
            self.dropped += 1
            return None
        start = max(now_us, self._line_free_at_us)
        if self.params.bandwidth_bps > 0:
            tx_us = int(len(payload) * 1e6 / self.params.bandwidth_bps)
        else:
            tx_us = 0
        self._line_free_at_us = start + tx_us
        deliver = self._line_free_at_us + int(self.params.delay_ms * 1000)
        if self.params.jitter_ms > 0:
            deliver += int(self._rng.uniform(0.0, self.params.jitter_ms) * 1000)
        # FIFO: a later message never overtakes an earlier one
        deliver = max(deliver, self._last_deliver_at_us)
        self._last_deliver_at_us = deliver
        return deliver


def link_transmit(link: LinkSimulator, payload: bytes, now_us: int) -> Optional[int]:
    return link.transmit(payload, now_us)
