// Read-only cursor mirror: applies server commands with the same rules as
// the reference client. The cursor freezes where it was while disconnected
// and jumps straight to the newest position after reconnecting; stale
// sequence numbers are discarded and the held flag is re-derived per
// connection from the server's resync.

import { Command, decodeCommand } from "./protocol.js";

export interface MirrorState {
  x: number;
  y: number;
  held: boolean;
  connected: boolean;
  lastSeq: number;
  scrollUp: number;
  scrollDown: number;
}

export type ClickListener = (x: number, y: number, atMs: number) => void;

export class CursorMirror {
  x = 0;
  y = 0;
  held = false;
  connected = false;
  lastSeq = -1;
  scrollUp = 0;
  scrollDown = 0;
  applied: Command[] = [];
  decodeErrors = 0;
  private clickListeners: ClickListener[] = [];

  onClick(fn: ClickListener): void {
    this.clickListeners.push(fn);
  }

  onOpen(): void {
    this.connected = true;
    this.lastSeq = -1; // per-connection sequencing
    this.held = false; // re-derived from the resync
  }

  onClose(): void {
    this.connected = false; // position freezes where it is
  }

  applyRaw(raw: string, atMs: number): boolean {
    let cmd: Command;
    try {
      cmd = decodeCommand(raw);
    } catch {
      this.decodeErrors += 1;
      return false;
    }
    return this.apply(cmd, atMs);
  }

  apply(cmd: Command, atMs: number): boolean {
    if (cmd.seq <= this.lastSeq) return false; // stale
    this.lastSeq = cmd.seq;
    switch (cmd.t) {
      case "move":
        this.x = cmd.x!;
        this.y = cmd.y!;
        break;
      case "click":
        this.x = cmd.x!;
        this.y = cmd.y!;
        for (const fn of this.clickListeners) fn(cmd.x!, cmd.y!, atMs);
        break;
      case "hold":
        this.held = true;
        break;
      case "release":
        this.held = false;
        break;
      case "scroll":
        if (cmd.dir === "up") this.scrollUp += cmd.n!;
        else this.scrollDown += cmd.n!;
        break;
    }
    this.applied.push(cmd);
    return true;
  }

  state(): MirrorState {
    return {
      x: this.x,
      y: this.y,
      held: this.held,
      connected: this.connected,
      lastSeq: this.lastSeq,
      scrollUp: this.scrollUp,
      scrollDown: this.scrollDown,
    };
  }
}
