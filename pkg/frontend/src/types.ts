/** Message schemas shared with the session service (text-framed JSON). */

export type Vec3 = [number, number, number];

export interface SessionSnapshot {
  type: "snapshot";
  tick: number;
  t: number;
  x_l: Vec3;
  x: Vec3;
  tau: Vec3;
  l1: Vec3;
  f_env: Vec3;
  error: number;
  controller: "tic" | "iac" | "high-gain";
  ruptured: boolean;
  paused: boolean;
}

export interface SessionError {
  type: "error" | "diverged";
  message: string;
}

export type ServerMessage = SessionSnapshot | SessionError;

export type InputEvent =
  | { kind: "target_move"; x: number; y: number; z: number }
  | { kind: "grasp"; value: number }
  | { kind: "toggle_controller"; controller: "tic" | "iac" | "high-gain" }
  | { kind: "set_delay"; delta: number }
  | { kind: "scene"; scenario: string }
  | { kind: "pause" }
  | { kind: "resume" }
  | { kind: "reset" }
  | { kind: "advance"; ticks: number };

export const GRASP_MIN = 0;
export const GRASP_MAX = 20;

function isVec3(v: unknown): v is Vec3 {
  return Array.isArray(v) && v.length === 3 && v.every((n) => typeof n === "number");
}

/** Parse one server frame; returns null for anything malformed. */
export function parseServerMessage(text: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  if (msg.type === "error" || msg.type === "diverged") {
    return { type: msg.type, message: String(msg.message ?? "") };
  }
  if (msg.type !== "snapshot") return null;
  if (
    typeof msg.tick !== "number" ||
    typeof msg.t !== "number" ||
    typeof msg.error !== "number" ||
    !isVec3(msg.x_l) ||
    !isVec3(msg.x) ||
    !isVec3(msg.tau) ||
    !isVec3(msg.l1) ||
    !isVec3(msg.f_env)
  ) {
    return null;
  }
  return msg as unknown as SessionSnapshot;
}

/** Clamp a slider value onto the grasp range in newtons. */
export function clampGrasp(value: number): number {
  return Math.min(GRASP_MAX, Math.max(GRASP_MIN, value));
}
