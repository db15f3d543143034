// Virtual hand: the pointer steers the index fingertip inside the sensor's
// interaction box, keys toggle finger extension, and assist buttons inject
// tap / circle trajectories with the same kinematics the synthetic
// generator uses, so the server is guaranteed to recognize them.

import { FINGER_NAMES, FingerName, HandPose, Vec3 } from "./protocol.js";

// 2 ft interaction cube, floated 100 mm above the sensor (+y up, +z toward user)
export const BOX_MIN: Vec3 = { x: -304.8, y: 100.0, z: -304.8 };
export const BOX_MAX: Vec3 = { x: 304.8, y: 709.6, z: 304.8 };

// Same rigid offsets as the synthetic generator; extension lives in the flags.
const TIP_OFFSETS: Record<FingerName, Vec3> = {
  thumb: { x: -30, y: -25, z: 10 },
  index: { x: 0, y: 0, z: 0 },
  middle: { x: 12, y: 2, z: 0 },
  ring: { x: 24, y: -2, z: 2 },
  pinky: { x: 36, y: -8, z: 4 },
};
const PALM_OFFSET: Vec3 = { x: 8, y: -50, z: 30 };

export const TAP_DEPTH_MM = 15.0;
export const TAP_PEAK_MM_S = 200.0;
// sine-profile forward phase: peak speed pi*depth/(2*dF)
export const TAP_FORWARD_S = (Math.PI * TAP_DEPTH_MM) / (2 * TAP_PEAK_MM_S);
export const CIRCLE_RADIUS_MM = 20.0;
export const CIRCLE_OMEGA_RAD_S = 2 * Math.PI; // 1 rev/s -> 4 notches per second

const clamp = (v: number, lo: number, hi: number) => Math.min(Math.max(v, lo), hi);

export type Assist =
  | { kind: "none" }
  | { kind: "tap"; startMs: number }
  | { kind: "circle"; dir: "ccw" | "cw"; center: { x: number; y: number }; theta0: number; startMs: number };

export class VirtualHand {
  pos: Vec3 = { x: 0, y: (BOX_MIN.y + BOX_MAX.y) / 2, z: 0 };
  extended: Set<FingerName> = new Set(["index"]);
  assist: Assist = { kind: "none" };
  private lastTs = -1;

  /** Map a pointer position inside the panel onto the box (panel y grows
   * down, box y grows up); depth01 in [0,1] maps onto box z. */
  setPointer(px: number, py: number, panelW: number, panelH: number, depth01: number): void {
    const fx = clamp(px / panelW, 0, 1);
    const fy = clamp(py / panelH, 0, 1);
    this.pos = {
      x: BOX_MIN.x + fx * (BOX_MAX.x - BOX_MIN.x),
      y: BOX_MAX.y - fy * (BOX_MAX.y - BOX_MIN.y),
      z: BOX_MIN.z + clamp(depth01, 0, 1) * (BOX_MAX.z - BOX_MIN.z),
    };
  }

  toggleFinger(name: FingerName): void {
    if (this.extended.has(name)) this.extended.delete(name);
    else this.extended.add(name);
  }

  openHand(): void {
    this.extended = new Set(FINGER_NAMES);
  }

  fist(): void {
    this.extended = new Set();
  }

  startTap(nowMs: number): void {
    if (this.assist.kind === "none") this.assist = { kind: "tap", startMs: nowMs };
  }

  startCircle(dir: "ccw" | "cw", nowMs: number): void {
    if (this.assist.kind !== "none") return;
    // orbit so the current fingertip is on the rim: center sits one radius
    // toward -x, matching the generator's rim-start pattern
    const center = { x: this.pos.x - CIRCLE_RADIUS_MM, y: this.pos.y };
    this.assist = { kind: "circle", dir, center, theta0: 0, startMs: nowMs };
  }

  stopCircle(): void {
    if (this.assist.kind === "circle") this.assist = { kind: "none" };
  }

  /** Effective fingertip with any active assist applied. */
  fingertip(nowMs: number): Vec3 {
    const a = this.assist;
    if (a.kind === "tap") {
      const t = (nowMs - a.startMs) / 1000;
      if (t >= 2 * TAP_FORWARD_S) {
        this.assist = { kind: "none" };
        return this.pos;
      }
      let s: number;
      if (t <= TAP_FORWARD_S) {
        s = (TAP_DEPTH_MM * (1 - Math.cos((Math.PI * t) / TAP_FORWARD_S))) / 2;
      } else {
        const back = t - TAP_FORWARD_S;
        s = (TAP_DEPTH_MM * (1 + Math.cos((Math.PI * back) / TAP_FORWARD_S))) / 2;
      }
      return { x: this.pos.x, y: this.pos.y, z: this.pos.z - s };
    }
    if (a.kind === "circle") {
      const t = (nowMs - a.startMs) / 1000;
      const sign = a.dir === "ccw" ? 1 : -1;
      const theta = a.theta0 + sign * CIRCLE_OMEGA_RAD_S * t;
      return {
        x: a.center.x + CIRCLE_RADIUS_MM * Math.cos(theta),
        y: a.center.y + CIRCLE_RADIUS_MM * Math.sin(theta),
        z: this.pos.z,
      };
    }
    return this.pos;
  }

  /** One frame for the feed; timestamps are strictly monotone. */
  frameAt(nowMs: number, streamStartMs: number): HandPose {
    let ts = Math.round((nowMs - streamStartMs) * 1000);
    if (ts <= this.lastTs) ts = this.lastTs + 1;
    this.lastTs = ts;
    const tip = this.clampToBox(this.fingertip(nowMs));
    const fingers = FINGER_NAMES.map((name) => ({
      name,
      tip: {
        x: tip.x + TIP_OFFSETS[name].x,
        y: tip.y + TIP_OFFSETS[name].y,
        z: tip.z + TIP_OFFSETS[name].z,
      },
      ext: this.extended.has(name),
    }));
    return {
      ts_us: ts,
      hand: true,
      palm: { x: tip.x + PALM_OFFSET.x, y: tip.y + PALM_OFFSET.y, z: tip.z + PALM_OFFSET.z },
      palmNormal: { x: 0, y: 0, z: -1 },
      fingers,
    };
  }

  private clampToBox(p: Vec3): Vec3 {
    return {
      x: clamp(p.x, BOX_MIN.x, BOX_MAX.x),
      y: clamp(p.y, BOX_MIN.y, BOX_MAX.y),
      z: clamp(p.z, BOX_MIN.z, BOX_MAX.z),
    };
  }
}
