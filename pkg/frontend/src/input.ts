// Keyboard state -> combined goal, edge-triggered.
//
// ArrowLeft -> left, ArrowRight -> right, nothing held -> stationary,
// Space -> jump; Space combines with a direction into jump_left /
// jump_right.  A goal message is emitted once per edge that changes the
// combined goal; key auto-repeat never re-sends.

import type { Goal } from "./protocol.js";

const TRACKED = new Set(["ArrowLeft", "ArrowRight", " ", "Space"]);

export function combineGoal(pressed: ReadonlySet<string>): Goal {
  const left = pressed.has("ArrowLeft");
  const right = pressed.has("ArrowRight");
  const jump = pressed.has(" ") || pressed.has("Space");
  // opposite directions cancel
  const dir = left === right ? "" : left ? "left" : "right";
  if (jump) return dir ? (`jump_${dir}` as Goal) : "jump";
  return dir ? (dir as Goal) : "stationary";
}

export class InputTracker {
  private pressed = new Set<string>();
  private lastSent: Goal | null = null;

  constructor(private send: (goal: Goal) => void) {}

  keydown(key: string): void {
    if (!TRACKED.has(key) || this.pressed.has(key)) return; // auto-repeat
    this.pressed.add(key);
    this.emit();
  }

  keyup(key: string): void {
    if (!TRACKED.has(key) || !this.pressed.has(key)) return;
    this.pressed.delete(key);
    this.emit();
  }

  /** Re-send the current goal after a reconnect. */
  resend(): void {
    this.lastSent = null;
    this.emit();
  }

  get current(): Goal {
    return combineGoal(this.pressed);
  }

  private emit(): void {
    const goal = this.current;
    if (goal === this.lastSent) return;
    this.lastSent = goal;
    this.send(goal);
  }

  attach(target: {
    addEventListener(type: string, fn: (ev: KeyboardEvent) => void): void;
  }): void {
    target.addEventListener("keydown", (ev) => {
      if (TRACKED.has(ev.key)) ev.preventDefault?.();
      this.keydown(ev.key);
    });
    target.addEventListener("keyup", (ev) => this.keyup(ev.key));
  }
}
