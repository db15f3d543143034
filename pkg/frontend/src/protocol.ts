// Wire protocol shared with the server: one compact JSON object per
// WebSocket text message. Encoding is canonical so the server-side codec
// reproduces our bytes exactly: coordinates are quantized to 4 decimals
// (0.1 um, far beyond any gesture threshold), integral values are written
// without a decimal point, and -0 folds to 0.

export type FingerName = "thumb" | "index" | "middle" | "ring" | "pinky";
export const FINGER_NAMES: FingerName[] = ["thumb", "index", "middle", "ring", "pinky"];

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface HandPose {
  ts_us: number;
  hand: boolean;
  palm: Vec3;
  palmNormal: Vec3;
  fingers: { name: FingerName; tip: Vec3; ext: boolean }[];
}

export type CommandKind = "move" | "click" | "hold" | "release" | "scroll";

export interface Command {
  t: CommandKind;
  x?: number;
  y?: number;
  dir?: "up" | "down";
  n?: number;
  seq: number;
  ts_us: number;
}

export function quant(v: number): number {
  return Math.round(v * 10_000) / 10_000 + 0;
}

function vec3Wire(v: Vec3): number[] {
  return [quant(v.x), quant(v.y), quant(v.z)];
}

export function encodeFrame(pose: HandPose): string {
  const obj = {
    t: "frame",
    ts_us: pose.ts_us,
    hand: pose.hand,
    palm: vec3Wire(pose.palm),
    palm_normal: vec3Wire(pose.palmNormal),
    fingers: pose.fingers.map((f) => ({ name: f.name, tip: vec3Wire(f.tip), ext: f.ext })),
  };
  return JSON.stringify(obj);
}

export function encodeHello(role: string, name: string): string {
  return JSON.stringify({ t: "hello", role, name });
}

const COMMAND_KINDS: CommandKind[] = ["move", "click", "hold", "release", "scroll"];

/** Strict parse of a server command; throws on anything malformed. */
export function decodeCommand(raw: string): Command {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new Error("not JSON");
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new Error("not an object");
  }
  const rec = obj as Record<string, unknown>;
  const t = rec.t;
  if (typeof t !== "string" || !COMMAND_KINDS.includes(t as CommandKind)) {
    throw new Error(`unknown kind ${String(t)}`);
  }
  const reqInt = (key: string, min = 0): number => {
    const v = rec[key];
    if (typeof v !== "number" || !Number.isInteger(v) || v < min) {
      throw new Error(`bad field ${key}`);
    }
    return v;
  };
  const expect = (keys: string[]) => {
    const have = Object.keys(rec).sort();
    const want = [...keys].sort();
    if (have.length !== want.length || have.some((k, i) => k !== want[i])) {
      throw new Error(`field set mismatch for ${t}`);
    }
  };
  const seqTs = { seq: 0, ts_us: 0 };
  if (t === "move" || t === "click") {
    expect(["t", "x", "y", "seq", "ts_us"]);
    return { t: t as CommandKind, x: reqInt("x"), y: reqInt("y"), seq: reqInt("seq"), ts_us: reqInt("ts_us") };
  }
  if (t === "scroll") {
    expect(["t", "dir", "n", "seq", "ts_us"]);
    const dir = rec.dir;
    if (dir !== "up" && dir !== "down") throw new Error("bad scroll dir");
    return { t, dir, n: reqInt("n", 1), seq: reqInt("seq"), ts_us: reqInt("ts_us") };
  }
  expect(["t", "seq", "ts_us"]);
  void seqTs;
  return { t: t as CommandKind, seq: reqInt("seq"), ts_us: reqInt("ts_us") };
}
