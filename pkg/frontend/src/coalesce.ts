/** Client-side input coalescing: latest-wins per kind, rate-capped sends. */

import type { InputEvent } from "./types.js";

export const MAX_MESSAGES_PER_SECOND = 120;

/**
 * Buffers input events and releases them at a bounded rate. Continuous
 * inputs (target drags, grasp slider) overwrite their pending predecessor
 * so a flood collapses to the latest value; discrete inputs (toggles,
 * pause/reset) are never dropped.
 */
export class InputCoalescer {
  private pending = new Map<string, InputEvent>();
  private queue: InputEvent[] = [];
  private lastSend = -Infinity;
  private readonly interval: number;

  constructor(maxPerSecond: number = MAX_MESSAGES_PER_SECOND) {
    if (maxPerSecond <= 0) throw new Error("rate cap must be positive");
    this.interval = 1000 / maxPerSecond;
  }

  push(event: InputEvent): void {
    if (event.kind === "target_move" || event.kind === "grasp" || event.kind === "set_delay") {
      this.pending.set(event.kind, event);
    } else {
      this.queue.push(event);
    }
  }

  /** Events allowed out at time `nowMs`; at most one coalesced kind per call. */
  drain(nowMs: number): InputEvent[] {
    const out: InputEvent[] = [...this.queue];
    this.queue = [];
    if (this.pending.size > 0 && nowMs - this.lastSend >= this.interval) {
      for (const event of this.pending.values()) out.push(event);
      this.pending.clear();
    }
    if (out.length > 0) this.lastSend = nowMs;
    return out;
  }

  get hasPending(): boolean {
    return this.pending.size > 0 || this.queue.length > 0;
  }
}
