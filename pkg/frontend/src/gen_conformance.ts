// Writes the protocol conformance corpus: a deterministic sample of every
// message shape this UI produces, one JSON text message per line. The
// server-side decoder must accept each line byte-for-byte; its encoder must
// reproduce the identical bytes.

import { writeFileSync, mkdirSync } from "node:fs";
import { dirname } from "node:path";
import { VirtualHand } from "./hand.js";
import { encodeFrame, encodeHello, FINGER_NAMES } from "./protocol.js";

export function conformanceLines(): string[] {
  const lines: string[] = [];
  lines.push(encodeHello("client", "webui-mirror"));
  lines.push(encodeHello("feed", "webui-hand"));

  const hand = new VirtualHand();
  const t0 = 1000.0; // synthetic clock, milliseconds
  const tick = 1000 / 120;
  let now = t0;
  const step = (n: number) => {
    for (let i = 0; i < n; i++) {
      now += tick;
      lines.push(encodeFrame(hand.frameAt(now, t0)));
    }
  };

  // pointer glide across the panel at a few depths
  for (let k = 0; k <= 20; k++) {
    hand.setPointer(24 * k, 12 * k, 480, 480, k / 20);
    step(1);
  }
  // finger toggles: every count from fist to open hand
  hand.fist();
  step(2);
  for (const name of FINGER_NAMES) {
    hand.toggleFinger(name);
    step(2);
  }
  // back to a pointing posture, settle at the panel center
  hand.fist();
  step(1);
  hand.toggleFinger("index");
  step(6);
  hand.setPointer(240, 240, 480, 480, 0.5);
  step(8);
  // tap assist: the scripted poke, sampled through its whole profile
  hand.startTap(now);
  step(40);
  step(20); // refractory / detector settle
  // circle assists, both directions, with time for the sweep to decay between
  hand.startCircle("ccw", now);
  step(60); // half a revolution: two up-notches
  hand.stopCircle();
  step(70); // sweep decay completes before the opposite direction starts
  hand.startCircle("cw", now);
  step(60);
  hand.stopCircle();
  step(5);
  // awkward coordinates that exercise number canonicalization
  hand.setPointer(1 / 3, 2 / 7, 480, 480, 1 / 9);
  step(3);
  hand.setPointer(480, 480, 480, 480, 1.0); // clamped corner, integral values
  step(3);
  return lines;
}

const out = process.argv[2];
if (out) {
  mkdirSync(dirname(out), { recursive: true });
  const lines = conformanceLines();
  writeFileSync(out, lines.join("\n") + "\n", "utf-8");
  console.log(`wrote ${lines.length} messages to ${out}`);
}
