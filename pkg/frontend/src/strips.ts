/** Strip charts: a sliding 10 s window of scalar telemetry. */

import type { Draw2D } from "./scene.js";

export const STRIP_WINDOW_S = 10;

export interface StripSample {
  t: number;
  value: number;
}

/** Time-windowed sample buffer; old samples fall off as time advances. */
export class StripBuffer {
  private samples: StripSample[] = [];
  readonly windowS: number;

  constructor(windowS: number = STRIP_WINDOW_S) {
    this.windowS = windowS;
  }

  push(t: number, value: number): void {
    // out-of-order samples (e.g. after a reset) clear the stale window
    const last = this.samples[this.samples.length - 1];
    if (last !== undefined && t < last.t) this.samples = [];
    this.samples.push({ t, value });
    const cutoff = t - this.windowS;
    let drop = 0;
    while (drop < this.samples.length && this.samples[drop].t < cutoff) drop += 1;
    if (drop > 0) this.samples = this.samples.slice(drop);
  }

  get length(): number {
    return this.samples.length;
  }

  get data(): readonly StripSample[] {
    return this.samples;
  }

  range(): [number, number] {
    if (this.samples.length === 0) return [0, 1];
    let lo = Infinity;
    let hi = -Infinity;
    for (const s of this.samples) {
      lo = Math.min(lo, s.value);
      hi = Math.max(hi, s.value);
    }
    if (hi - lo < 1e-12) hi = lo + 1e-12;
    return [lo, hi];
  }
}

export interface StripLayout {
  x: number;
  y: number;
  width: number;
  height: number;
  label: string;
  color: string;
}

export function drawStrip(ctx: Draw2D, layout: StripLayout, buffer: StripBuffer): void {
  ctx.strokeStyle = "#c0c0c0";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.rect(layout.x, layout.y, layout.width, layout.height);
  ctx.stroke();
  ctx.font = "10px sans-serif";
  ctx.fillStyle = "#404040";
  ctx.fillText(layout.label, layout.x + 4, layout.y + 12);

  const data = buffer.data;
  if (data.length < 2) return;
  const t1 = data[data.length - 1].t;
  const t0 = t1 - buffer.windowS;
  const [lo, hi] = buffer.range();
  ctx.strokeStyle = layout.color;
  ctx.beginPath();
  data.forEach((s, i) => {
    const px = layout.x + ((s.t - t0) / buffer.windowS) * layout.width;
    const py = layout.y + layout.height * (1 - (s.value - lo) / (hi - lo));
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}
