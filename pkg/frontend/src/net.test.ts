import { describe, expect, it } from "vitest";

import { backoffDelay, Client, FrameMailbox, type SocketLike } from "./net.js";
import type { FrameMsg } from "./protocol.js";

function frame(t: number): FrameMsg {
  return { type: "frame", t, bodies: [], hud: { reward: 0, vx: 0, goal: "" } };
}

describe("FrameMailbox", () => {
  it("keeps only the newest frame under backpressure", () => {
    const box = new FrameMailbox();
    for (let k = 0; k < 10; k++) box.put(frame(k));
    const got = box.take();
    expect(got?.t).toBe(9);
    expect(box.dropped).toBe(9);
    expect(box.take()).toBeNull();
  });
});

describe("backoff", () => {
  it("doubles and caps", () => {
    expect(backoffDelay(0)).toBe(500);
    expect(backoffDelay(1)).toBe(1000);
    expect(backoffDelay(2)).toBe(2000);
    expect(backoffDelay(10)).toBe(8000);
  });
});

class FakeSocket implements SocketLike {
  static instances: FakeSocket[] = [];
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;

  constructor() {
    FakeSocket.instances.push(this);
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.onclose?.();
  }
}

function makeClient() {
  FakeSocket.instances = [];
  const states: string[] = [];
  const timers: Array<() => void> = [];
  const client = new Client(
    "ws://test/ws",
    { onState: (s) => states.push(s) },
    () => new FakeSocket(),
    (fn) => timers.push(fn),
  );
  return { client, states, timers };
}

describe("Client reconnect", () => {
  it("reconnects with backoff after a drop and resumes", () => {
    const { client, states, timers } = makeClient();
    client.connect();
    const first = FakeSocket.instances[0];
    first.onopen?.();
    expect(states).toContain("connected");

    first.onclose?.(); // server restart
    expect(states[states.length - 1]).toBe("retrying");
    expect(timers.length).toBe(1);
    timers[0](); // fire the scheduled reconnect
    const second = FakeSocket.instances[1];
    expect(second).toBeDefined();
    second.onopen?.();
    expect(client.state).toBe("connected");

    // resumed stream flows into the mailbox
    second.onmessage?.({ data: JSON.stringify(frame(3)) });
    expect(client.frames.take()?.t).toBe(3);
  });

  it("drops sends while disconnected", () => {
    const { client } = makeClient();
    client.connect();
    expect(client.send("{}")).toBe(false);
    const sock = FakeSocket.instances[0];
    sock.onopen?.();
    expect(client.send("{}")).toBe(true);
    expect(sock.sent).toEqual(["{}"]);
  });

  it("routes spec and error messages to hooks", () => {
    let gotSpec = false;
    let gotError = "";
    const client = new Client("ws://t", {
      onSpec: () => { gotSpec = true; },
      onError: (code) => { gotError = code; },
    }, () => new FakeSocket(), () => {});
    client.connect();
    FakeSocket.instances.at(-1)!.onopen?.();
    client.handle(JSON.stringify({ type: "spec", obs_dim: 1, act_dim: 1, agents: 1 }));
    client.handle(JSON.stringify({ type: "error", code: "bad_shape", msg: "x" }));
    client.handle("not json at all");
    expect(gotSpec).toBe(true);
    expect(gotError).toBe("bad_shape");
  });
});
