/** Browser wiring: DOM controls, render loop, session hookup. */

import { SessionClient } from "./client.js";
import { DEFAULT_SCENE, renderScene, toMeters, type SceneConfig } from "./scene.js";
import { StripBuffer, drawStrip, type StripLayout } from "./strips.js";
import { clampGrasp, type SessionSnapshot } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const SCENES: Record<string, Partial<SceneConfig>> = {
  custom: { scene: "free" },
  balloon: { scene: "balloon", balloonHeightM: 0.1 },
  bilateral_polish: { scene: "table", tableHeightM: 0.0 },
};

export function start(): void {
  const canvas = el<HTMLCanvasElement>("scene");
  const stripsCanvas = el<HTMLCanvasElement>("strips");
  const ctx = canvas.getContext("2d")!;
  const sctx = stripsCanvas.getContext("2d")!;
  let cfg: SceneConfig = { ...DEFAULT_SCENE, widthPx: canvas.width, heightPx: canvas.height };

  const host = location.host || "127.0.0.1:8700";
  const client = new SessionClient(
    `ws://${host}/session?mode=realtime`,
    (url) => new WebSocket(url) as unknown as import("./client.js").SocketLike
  );

  let latest: SessionSnapshot | null = null;
  let connected = false;
  const errorStrip = new StripBuffer();
  const l1Strip = new StripBuffer();
  const forceStrip = new StripBuffer();

  client.onMessage = (msg) => {
    if (msg.type === "snapshot") {
      latest = msg;
      errorStrip.push(msg.t, msg.error);
      l1Strip.push(msg.t, msg.l1[0]);
      forceStrip.push(msg.t, Math.hypot(...msg.f_env));
    } else {
      el<HTMLDivElement>("status").textContent = `${msg.type}: ${msg.message}`;
    }
  };
  client.onStatus = (up) => {
    connected = up;
    el<HTMLDivElement>("status").textContent = up ? "connected" : "reconnecting...";
  };
  client.connect();

  let dragging = false;
  let yAxis = 0;
  const sendTarget = (ev: PointerEvent) => {
    const rect = canvas.getBoundingClientRect();
    const [x, z] = toMeters(cfg, ev.clientX - rect.left, ev.clientY - rect.top);
    client.send({ kind: "target_move", x, y: yAxis, z });
  };
  canvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    sendTarget(ev);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (dragging) sendTarget(ev);
  });
  window.addEventListener("pointerup", () => {
    dragging = false;
  });

  el<HTMLInputElement>("grasp").addEventListener("input", (ev) => {
    const raw = Number((ev.target as HTMLInputElement).value);
    client.send({ kind: "grasp", value: clampGrasp(raw) });
  });
  el<HTMLInputElement>("yaxis").addEventListener("input", (ev) => {
    yAxis = Number((ev.target as HTMLInputElement).value);
  });
  el<HTMLSelectElement>("controller").addEventListener("change", (ev) => {
    const controller = (ev.target as HTMLSelectElement).value as "tic" | "iac" | "high-gain";
    client.send({ kind: "toggle_controller", controller });
  });
  el<HTMLInputElement>("delay").addEventListener("change", (ev) => {
    client.send({ kind: "set_delay", delta: Number((ev.target as HTMLInputElement).value) / 1000 });
  });
  el<HTMLSelectElement>("scenario").addEventListener("change", (ev) => {
    const scenario = (ev.target as HTMLSelectElement).value;
    cfg = { ...cfg, ...SCENES[scenario] };
    client.send({ kind: "scene", scenario });
  });
  el<HTMLButtonElement>("pause").addEventListener("click", () => client.send({ kind: "pause" }));
  el<HTMLButtonElement>("resume").addEventListener("click", () => client.send({ kind: "resume" }));
  el<HTMLButtonElement>("reset").addEventListener("click", () => client.send({ kind: "reset" }));

  const strips: Array<[StripLayout, StripBuffer]> = [
    [{ x: 0, y: 0, width: 640, height: 50, label: "error [m]", color: "#c03030" }, errorStrip],
    [{ x: 0, y: 56, width: 640, height: 50, label: "L1 [N/m]", color: "#3060c0" }, l1Strip],
    [{ x: 0, y: 112, width: 640, height: 50, label: "|F_env| [N]", color: "#309050" }, forceStrip],
  ];

  const frame = () => {
    if (latest !== null) renderScene(ctx, cfg, latest, connected);
    sctx.clearRect(0, 0, stripsCanvas.width, stripsCanvas.height);
    for (const [layout, buffer] of strips) drawStrip(sctx, layout, buffer);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}
