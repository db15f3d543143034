// Fitts-style target acquisition task: circular targets appear, the user
// steers the remote cursor and clicks; per-trial movement time and hit/miss
// are recorded and exportable as JSON. Apparatus only - no study claims.

export interface TaskRecord {
  target_radius_px: number;
  distance_px: number;
  movement_time_ms: number;
  hit: boolean;
}

export interface Target {
  x: number;
  y: number;
  radius: number;
}

export interface TaskConfig {
  trials: number;
  width: number;
  height: number;
  minRadius: number;
  maxRadius: number;
  seed: number;
}

/** Deterministic 32-bit PRNG so target layouts are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class TargetTask {
  records: TaskRecord[] = [];
  current: Target | null = null;
  private shownAtMs = 0;
  private lastClickPos: { x: number; y: number } | null = null;
  private remaining = 0;
  private rng: () => number;

  constructor(private config: TaskConfig) {
    this.rng = mulberry32(config.seed);
  }

  get done(): boolean {
    return this.remaining === 0 && this.current === null && this.records.length > 0;
  }

  start(nowMs: number): Target {
    this.records = [];
    this.remaining = this.config.trials;
    this.lastClickPos = null;
    return this.nextTarget(nowMs)!;
  }

  private nextTarget(nowMs: number): Target | null {
    if (this.remaining === 0) {
      this.current = null;
      return null;
    }
    this.remaining -= 1;
    const c = this.config;
    const radius = c.minRadius + this.rng() * (c.maxRadius - c.minRadius);
    const x = radius + this.rng() * (c.width - 2 * radius);
    const y = radius + this.rng() * (c.height - 2 * radius);
    this.current = { x, y, radius };
    this.shownAtMs = nowMs;
    return this.current;
  }

  /** Feed a click (in task-panel pixels); returns the finished record. */
  click(x: number, y: number, nowMs: number): TaskRecord | null {
    if (this.current === null) return null;
    const t = this.current;
    const dx = x - t.x;
    const dy = y - t.y;
    const hit = Math.hypot(dx, dy) <= t.radius;
    const from = this.lastClickPos ?? { x: this.config.width / 2, y: this.config.height / 2 };
    const record: TaskRecord = {
      target_radius_px: Math.round(t.radius),
      distance_px: Math.round(Math.hypot(t.x - from.x, t.y - from.y)),
      movement_time_ms: Math.max(1, Math.round(nowMs - this.shownAtMs)),
      hit,
    };
    this.records.push(record);
    this.lastClickPos = { x, y };
    this.nextTarget(nowMs);
    return record;
  }

  exportJson(): string {
    return JSON.stringify(this.records, null, 2);
  }
}
