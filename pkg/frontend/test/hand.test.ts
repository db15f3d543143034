import { describe, expect, it } from "vitest";
import {
  BOX_MAX,
  BOX_MIN,
  CIRCLE_OMEGA_RAD_S,
  CIRCLE_RADIUS_MM,
  TAP_DEPTH_MM,
  TAP_FORWARD_S,
  TAP_PEAK_MM_S,
  VirtualHand,
} from "../src/hand.js";

describe("pointer mapping", () => {
  it("panel center at mid depth maps to the box center", () => {
    const hand = new VirtualHand();
    hand.setPointer(240, 240, 480, 480, 0.5);
    expect(hand.pos.x).toBeCloseTo(0, 9);
    expect(hand.pos.y).toBeCloseTo((BOX_MIN.y + BOX_MAX.y) / 2, 9);
    expect(hand.pos.z).toBeCloseTo(0, 9);
  });

  it("panel top-left maps to box min-x / max-y", () => {
    const hand = new VirtualHand();
    hand.setPointer(0, 0, 480, 480, 0);
    expect(hand.pos.x).toBe(BOX_MIN.x);
    expect(hand.pos.y).toBe(BOX_MAX.y);
    expect(hand.pos.z).toBe(BOX_MIN.z);
  });

  it("positions outside the panel clamp to the box", () => {
    const hand = new VirtualHand();
    hand.setPointer(-50, 9999, 480, 480, 2.0);
    const frame = hand.frameAt(100, 0);
    const index = frame.fingers.find((f) => f.name === "index")!;
    expect(index.tip.x).toBeGreaterThanOrEqual(BOX_MIN.x);
    expect(index.tip.y).toBeGreaterThanOrEqual(BOX_MIN.y);
    expect(index.tip.z).toBeLessThanOrEqual(BOX_MAX.z);
  });
});

describe("frames", () => {
  it("timestamps are strictly monotone even for equal clock reads", () => {
    const hand = new VirtualHand();
    const a = hand.frameAt(10.0, 0);
    const b = hand.frameAt(10.0, 0);
    const c = hand.frameAt(10.001, 0);
    expect(b.ts_us).toBeGreaterThan(a.ts_us);
    expect(c.ts_us).toBeGreaterThan(b.ts_us);
  });

  it("finger flags follow toggles", () => {
    const hand = new VirtualHand();
    hand.openHand();
    expect(hand.frameAt(5, 0).fingers.filter((f) => f.ext)).toHaveLength(5);
    hand.fist();
    expect(hand.frameAt(6, 0).fingers.filter((f) => f.ext)).toHaveLength(0);
    hand.toggleFinger("index");
    hand.toggleFinger("ring");
    const ext = hand.frameAt(7, 0).fingers.filter((f) => f.ext).map((f) => f.name);
    expect(ext.sort()).toEqual(["index", "ring"]);
  });
});

describe("tap assist", () => {
  it("uses the generator's kinematics: 15 mm at 200 mm/s peak", () => {
    expect(TAP_DEPTH_MM).toBe(15);
    expect(TAP_PEAK_MM_S).toBe(200);
    expect(TAP_FORWARD_S).toBeCloseTo((Math.PI * 15) / 400, 12);
  });

  it("pokes along -z to full depth and returns", () => {
    const hand = new VirtualHand();
    hand.setPointer(240, 240, 480, 480, 0.5);
    const z0 = hand.pos.z;
    hand.startTap(0);
    const apex = hand.fingertip(TAP_FORWARD_S * 1000);
    expect(z0 - apex.z).toBeCloseTo(TAP_DEPTH_MM, 6);
    const back = hand.fingertip(2 * TAP_FORWARD_S * 1000 - 0.01);
    expect(z0 - back.z).toBeLessThan(0.01);
    // profile peak speed: sample the velocity near the midpoint
    const dt = 1;
    const a = hand.fingertip(TAP_FORWARD_S * 500 - dt / 2);
    const b = hand.fingertip(TAP_FORWARD_S * 500 + dt / 2);
    const v = ((a.z - b.z) / dt) * 1000;
    expect(v).toBeGreaterThan(TAP_PEAK_MM_S * 0.98);
    expect(v).toBeLessThan(TAP_PEAK_MM_S * 1.02);
  });

  it("assist ends by itself and x/y stay latched", () => {
    const hand = new VirtualHand();
    hand.setPointer(120, 300, 480, 480, 0.5);
    const before = { ...hand.pos };
    hand.startTap(0);
    const mid = hand.fingertip(60);
    expect(mid.x).toBe(before.x);
    expect(mid.y).toBe(before.y);
    hand.fingertip(2 * TAP_FORWARD_S * 1000 + 5);
    expect(hand.assist.kind).toBe("none");
  });
});

describe("circle assist", () => {
  it("starts on the rim and orbits at 1 rev/s", () => {
    const hand = new VirtualHand();
    hand.setPointer(240, 240, 480, 480, 0.5);
    const start = { ...hand.pos };
    hand.startCircle("ccw", 0);
    const p0 = hand.fingertip(0);
    expect(p0.x).toBeCloseTo(start.x, 9);
    expect(p0.y).toBeCloseTo(start.y, 9);
    // quarter revolution after 250 ms
    const q = hand.fingertip(250);
    expect(q.x).toBeCloseTo(start.x - CIRCLE_RADIUS_MM, 6);
    expect(q.y).toBeCloseTo(start.y + CIRCLE_RADIUS_MM, 6);
    expect(CIRCLE_OMEGA_RAD_S).toBeCloseTo(2 * Math.PI, 12);
  });

  it("cw orbits the other way and stop() releases", () => {
    const hand = new VirtualHand();
    hand.setPointer(240, 240, 480, 480, 0.5);
    const start = { ...hand.pos };
    hand.startCircle("cw", 0);
    const q = hand.fingertip(250);
    expect(q.y).toBeCloseTo(start.y - CIRCLE_RADIUS_MM, 6);
    hand.stopCircle();
    expect(hand.assist.kind).toBe("none");
  });
});
