import { HudView } from "./hud.js";
import { InputTracker } from "./input.js";
import { Client } from "./net.js";
import { goalCommand } from "./protocol.js";
import { Renderer } from "./render.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function main(): void {
  const canvas = el("scene") as HTMLCanvasElement;
  const hud = new HudView(el("goal"), el("vx"), el("reward"),
                          el("banner"), el("fps"));
  const renderer = new Renderer(canvas);

  const proto = location.protocol === "https:" ? "wss" : "ws";
  const url = `${proto}://${location.host}/ws`;
  let terrain: [number, number][] | null = null;

  const client = new Client(url, {
    onState: (s) => {
      hud.setState(s);
      if (s === "connected") input.resend();
    },
    onSpec: (spec) => {
      terrain = spec.terrain ?? null;
      if (spec.pelvis_geom !== undefined) renderer.setPelvisGeom(spec.pelvis_geom);
      el("env").textContent = spec.env ?? "";
    },
    onError: (code, msg) => hud.setError(code, msg),
  });

  const input = new InputTracker((goal) => {
    client.send(goalCommand(goal));
  });
  input.attach(window as unknown as {
    addEventListener(type: string, fn: (ev: KeyboardEvent) => void): void;
  });

  let frames = 0;
  let lastFpsAt = performance.now();
  const tick = (): void => {
    const frame = client.frames.take();
    if (frame) {
      renderer.draw(frame, terrain);
      hud.update(frame.hud);
      frames += 1;
    }
    const now = performance.now();
    if (now - lastFpsAt >= 1000) {
      hud.setFps((frames * 1000) / (now - lastFpsAt));
      frames = 0;
      lastFpsAt = now;
    }
    requestAnimationFrame(tick);
  };

  client.connect();
  requestAnimationFrame(tick);
}

main();
