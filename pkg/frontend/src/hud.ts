// HUD: server-echoed goal, velocity, reward plus the connection banner.
// The goal shown is always the server's word, never the local key state.

import type { ConnState } from "./net.js";
import type { Hud } from "./protocol.js";

export class HudView {
  private lastError = "";

  constructor(
    private goalEl: HTMLElement,
    private vxEl: HTMLElement,
    private rewardEl: HTMLElement,
    private bannerEl: HTMLElement,
    private fpsEl: HTMLElement,
  ) {}

  update(hud: Hud): void {
    this.goalEl.textContent = hud.goal || "stationary";
    this.vxEl.textContent = `${hud.vx >= 0 ? "+" : ""}${hud.vx.toFixed(2)} m/s`;
    this.rewardEl.textContent = hud.reward.toFixed(3);
  }

  setState(state: ConnState): void {
    const text = {
      connecting: "connecting…",
      connected: "connected",
      retrying: "connection lost — retrying…",
      closed: "closed",
    }[state];
    this.bannerEl.textContent = this.lastError
      ? `${text} — ${this.lastError}` : text;
    this.bannerEl.dataset.state = state;
  }

  setError(code: string, msg: string): void {
    this.lastError = `${code}: ${msg}`;
    this.bannerEl.textContent = this.lastError;
    setTimeout(() => { this.lastError = ""; }, 3000);
  }

  setFps(fps: number): void {
    this.fpsEl.textContent = `${fps.toFixed(0)} fps`;
  }
}
