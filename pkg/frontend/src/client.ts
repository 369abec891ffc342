/** WebSocket session client with reconnect and input coalescing. */

import { InputCoalescer } from "./coalesce.js";
import { parseServerMessage, type InputEvent, type ServerMessage } from "./types.js";

/** Minimal socket surface so tests can inject fakes and node can use `ws`. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  /** Base reconnect delay in ms; doubles per attempt up to maxBackoffMs. */
  backoffMs?: number;
  maxBackoffMs?: number;
  /** Scheduler injection point for tests. */
  setTimer?: (fn: () => void, ms: number) => unknown;
}

export class SessionClient {
  readonly url: string;
  connected = false;
  reconnectAttempts = 0;
  onMessage: ((msg: ServerMessage) => void) | null = null;
  onStatus: ((connected: boolean) => void) | null = null;

  private socket: SocketLike | null = null;
  private closedByUser = false;
  private readonly factory: SocketFactory;
  private readonly coalescer = new InputCoalescer();
  private readonly backoffMs: number;
  private readonly maxBackoffMs: number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;

  constructor(url: string, factory: SocketFactory, options: ClientOptions = {}) {
    this.url = url;
    this.factory = factory;
    this.backoffMs = options.backoffMs ?? 250;
    this.maxBackoffMs = options.maxBackoffMs ?? 5000;
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
  }

  connect(): void {
    this.closedByUser = false;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.connected = true;
      this.reconnectAttempts = 0;
      this.onStatus?.(true);
      this.flush(Date.now());
    };
    socket.onmessage = (event) => {
      const msg = parseServerMessage(String(event.data));
      if (msg !== null) this.onMessage?.(msg);
    };
    const drop = () => {
      if (!this.connected && this.socket !== socket) return;
      this.connected = false;
      this.socket = null;
      this.onStatus?.(false);
      // reconnecting keeps the engine run alive; only an explicit reset
      // event restarts it
      if (!this.closedByUser) this.scheduleReconnect();
    };
    socket.onclose = drop;
    socket.onerror = drop;
  }

  private scheduleReconnect(): void {
    const delay = Math.min(
      this.maxBackoffMs,
      this.backoffMs * 2 ** this.reconnectAttempts
    );
    this.reconnectAttempts += 1;
    this.setTimer(() => {
      if (!this.closedByUser && !this.connected) this.connect();
    }, delay);
  }

  /** Queue an input; coalesced and sent when the rate cap allows. */
  send(event: InputEvent, nowMs: number = Date.now()): void {
    this.coalescer.push(event);
    this.flush(nowMs);
  }

  flush(nowMs: number): void {
    if (!this.connected || this.socket === null) return;
    for (const event of this.coalescer.drain(nowMs)) {
      this.socket.send(JSON.stringify(event));
    }
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
    this.socket = null;
    this.connected = false;
  }
}
