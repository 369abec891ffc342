/** 2-D scene rendering: x horizontal, z vertical, meters to pixels. */

import type { SessionSnapshot } from "./types.js";

/** Subset of CanvasRenderingContext2D the scene needs; fakeable in tests. */
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export interface SceneConfig {
  widthPx: number;
  heightPx: number;
  /** Half-width of the visible workspace in meters. */
  halfWidthM: number;
  /** Visible z range in meters, bottom to top. */
  zMinM: number;
  zMaxM: number;
  scene: "free" | "balloon" | "table";
  balloonHeightM: number;
  tableHeightM: number;
  stiffnessMax: number;
}

export const DEFAULT_SCENE: SceneConfig = {
  widthPx: 640,
  heightPx: 480,
  halfWidthM: 0.4,
  zMinM: -0.1,
  zMaxM: 0.5,
  scene: "free",
  balloonHeightM: 0.1,
  tableHeightM: 0.0,
  stiffnessMax: 1320,
};

/** Scene-space pixels for a workspace point (x, z) in meters. */
export function toPixels(cfg: SceneConfig, xM: number, zM: number): [number, number] {
  const px = ((xM + cfg.halfWidthM) / (2 * cfg.halfWidthM)) * cfg.widthPx;
  const py = cfg.heightPx * (1 - (zM - cfg.zMinM) / (cfg.zMaxM - cfg.zMinM));
  return [px, py];
}

/** Inverse of toPixels: pointer position to workspace meters, clamped. */
export function toMeters(cfg: SceneConfig, px: number, py: number): [number, number] {
  const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));
  const xM = (clamp(px, 0, cfg.widthPx) / cfg.widthPx) * 2 * cfg.halfWidthM - cfg.halfWidthM;
  const zM = cfg.zMinM + (1 - clamp(py, 0, cfg.heightPx) / cfg.heightPx) * (cfg.zMaxM - cfg.zMinM);
  return [xM, zM];
}

export const MARKER_STYLE = {
  leader: { color: "#2060d0", radius: 8 },
  follower: { color: "#d08020", radius: 8 },
  // estimated-target marker stays visually distinct from the leader
  target: { color: "#d020b0", radius: 5 },
} as const;

function marker(ctx: Draw2D, x: number, y: number, color: string, r: number): void {
  ctx.beginPath();
  ctx.fillStyle = color;
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fill();
}

function drawContact(ctx: Draw2D, cfg: SceneConfig, ruptured: boolean): void {
  if (cfg.scene === "balloon") {
    const [bx, by] = toPixels(cfg, 0, cfg.balloonHeightM);
    ctx.beginPath();
    ctx.fillStyle = ruptured ? "#909090" : "#e05050";
    if (ruptured) {
      // burst: flat remnant on the ground line
      ctx.fillRect(bx - 30, by + 24, 60, 6);
    } else {
      ctx.arc(bx, by + 30, 30, 0, 2 * Math.PI);
      ctx.fill();
    }
  } else if (cfg.scene === "table") {
    const [, ty] = toPixels(cfg, 0, cfg.tableHeightM);
    ctx.fillStyle = "#7a5a3a";
    ctx.fillRect(0, ty, cfg.widthPx, 8);
  }
}

function drawGauge(ctx: Draw2D, cfg: SceneConfig, l1: number): void {
  const frac = Math.min(1, l1 / cfg.stiffnessMax);
  const h = cfg.heightPx * 0.6;
  const x = cfg.widthPx - 24;
  const y0 = cfg.heightPx * 0.2;
  ctx.strokeStyle = "#404040";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.rect(x, y0, 12, h);
  ctx.stroke();
  ctx.fillStyle = "#40a040";
  ctx.fillRect(x, y0 + h * (1 - frac), 12, h * frac);
  ctx.font = "10px sans-serif";
  ctx.fillStyle = "#202020";
  ctx.fillText(`${Math.round(l1)} N/m`, x - 28, y0 - 6);
}

/**
 * Draw one frame from a snapshot. Every displayed quantity comes from the
 * snapshot; nothing is simulated client-side.
 */
export function renderScene(
  ctx: Draw2D,
  cfg: SceneConfig,
  snap: SessionSnapshot,
  connected: boolean
): void {
  ctx.clearRect(0, 0, cfg.widthPx, cfg.heightPx);
  drawContact(ctx, cfg, snap.ruptured);
  drawGauge(ctx, cfg, snap.l1[0]);

  const [lx, ly] = toPixels(cfg, snap.x_l[0], snap.x_l[2]);
  const [fx, fy] = toPixels(cfg, snap.x[0], snap.x[2]);
  marker(ctx, lx, ly, MARKER_STYLE.leader.color, MARKER_STYLE.leader.radius);
  marker(ctx, fx, fy, MARKER_STYLE.follower.color, MARKER_STYLE.follower.radius);
  if (snap.controller === "iac") {
    const [tx, ty] = toPixels(cfg, snap.tau[0], snap.tau[2]);
    marker(ctx, tx, ty, MARKER_STYLE.target.color, MARKER_STYLE.target.radius);
  }

  ctx.font = "12px sans-serif";
  ctx.fillStyle = "#202020";
  ctx.fillText(
    `${snap.controller.toUpperCase()}  t=${snap.t.toFixed(2)}s  err=${(snap.error * 1000).toFixed(1)}mm`,
    8,
    16
  );
  if (!connected) {
    // frozen frame with a reconnect banner
    ctx.fillStyle = "#c02020";
    ctx.fillRect(0, cfg.heightPx / 2 - 14, cfg.widthPx, 28);
    ctx.fillStyle = "#ffffff";
    ctx.fillText("connection lost - reconnecting", cfg.widthPx / 2 - 90, cfg.heightPx / 2 + 4);
  }
}
