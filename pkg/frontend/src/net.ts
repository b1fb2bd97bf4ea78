// Socket client: reconnect with backoff, latest-frame mailbox.
//
// Frames overwrite a single slot; the renderer always draws the newest
// and stale frames are dropped under backpressure.

import { parseServerMsg, type FrameMsg, type ServerMsg, type SpecMsg } from "./protocol.js";

export type ConnState = "connecting" | "connected" | "retrying" | "closed";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
}

export interface ClientHooks {
  onState?(state: ConnState): void;
  onSpec?(spec: SpecMsg): void;
  onError?(code: string, msg: string): void;
}

const BACKOFF_BASE_MS = 500;
const BACKOFF_MAX_MS = 8000;

export function backoffDelay(attempt: number): number {
  return Math.min(BACKOFF_BASE_MS * 2 ** attempt, BACKOFF_MAX_MS);
}

export class FrameMailbox {
  private latest: FrameMsg | null = null;
  dropped = 0;

  put(frame: FrameMsg): void {
    if (this.latest !== null) this.dropped += 1;
    this.latest = frame;
  }

  /** Newest frame, or null; clears the slot. */
  take(): FrameMsg | null {
    const f = this.latest;
    this.latest = null;
    return f;
  }
}

export class Client {
  readonly frames = new FrameMailbox();
  state: ConnState = "connecting";
  spec: SpecMsg | null = null;
  private sock: SocketLike | null = null;
  private attempt = 0;
  private stopped = false;

  constructor(
    private url: string,
    private hooks: ClientHooks = {},
    private makeSocket: (url: string) => SocketLike =
      (u) => new WebSocket(u) as unknown as SocketLike,
    private schedule: (fn: () => void, ms: number) => void =
      (fn, ms) => { setTimeout(fn, ms); },
  ) {}

  connect(): void {
    this.setState(this.attempt === 0 ? "connecting" : "retrying");
    const sock = this.makeSocket(this.url);
    this.sock = sock;
    sock.onopen = () => {
      this.attempt = 0;
      this.setState("connected");
    };
    sock.onmessage = (ev) => this.handle(ev.data);
    sock.onerror = () => { /* close follows */ };
    sock.onclose = () => {
      this.sock = null;
      if (this.stopped) {
        this.setState("closed");
        return;
      }
      this.setState("retrying");
      const delay = backoffDelay(this.attempt);
      this.attempt += 1;
      this.schedule(() => this.connect(), delay);
    };
  }

  handle(raw: string): void {
    const msg: ServerMsg | null = parseServerMsg(raw);
    if (msg === null) return;
    if (msg.type === "frame") {
      this.frames.put(msg);
    } else if (msg.type === "spec") {
      this.spec = msg;
      this.hooks.onSpec?.(msg);
    } else {
      this.hooks.onError?.(msg.code, msg.msg);
    }
  }

  send(data: string): boolean {
    if (this.state !== "connected" || this.sock === null) return false;
    this.sock.send(data);
    return true;
  }

  stop(): void {
    this.stopped = true;
    this.sock?.close();
  }

  private setState(s: ConnState): void {
    this.state = s;
    this.hooks.onState?.(s);
  }
}
