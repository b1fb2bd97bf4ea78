// Side-view 2D renderer: world x right, world y up, camera follows the
// agent.  Geometry arrives as world poses per primitive; capsules and
// boxes are projected onto the x-y plane.

import type { BodyPose, FrameMsg } from "./protocol.js";

export interface Camera {
  x: number;      // world x at viewport centre
  y: number;
  scale: number;  // pixels per metre
}

export function rotate(q: [number, number, number, number],
                       v: [number, number, number]): [number, number, number] {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  // v + 2 q_v x (q_v x v + w v)
  const cx = y * vz - z * vy + w * vx;
  const cy = z * vx - x * vz + w * vy;
  const cz = x * vy - y * vx + w * vz;
  return [vx + 2 * (y * cz - z * cy), vy + 2 * (z * cx - x * cz),
          vz + 2 * (x * cy - y * cx)];
}

export function capsuleEndpoints(b: BodyPose): [[number, number], [number, number]] {
  const hl = b.size[1] ?? 0;
  const axis = rotate(b.quat, [0, 0, hl]);
  return [
    [b.pos[0] - axis[0], b.pos[1] - axis[1]],
    [b.pos[0] + axis[0], b.pos[1] + axis[1]],
  ];
}

export function boxCorners2d(b: BodyPose): [number, number][] {
  const [hx, hy] = [b.size[0], b.size[1]];
  const corners: [number, number][] = [];
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      const r = rotate(b.quat, [sx * hx, sy * hy, 0]);
      corners.push([b.pos[0] + r[0], b.pos[1] + r[1]]);
    }
  }
  // order for a quad outline
  return [corners[0], corners[1], corners[3], corners[2]];
}

export function followCamera(prev: Camera, targetX: number, targetY: number,
                             smoothing = 0.15): Camera {
  return {
    x: prev.x + (targetX - prev.x) * smoothing,
    y: prev.y + (targetY + 0.6 - prev.y) * smoothing * 0.5,
    scale: prev.scale,
  };
}

export function worldToScreen(cam: Camera, width: number, height: number,
                              wx: number, wy: number): [number, number] {
  return [
    width / 2 + (wx - cam.x) * cam.scale,
    height * 0.62 - (wy - cam.y) * cam.scale,
  ];
}

export class Renderer {
  camera: Camera = { x: 0, y: 1.0, scale: 140 };
  framesDrawn = 0;

  constructor(private canvas: HTMLCanvasElement,
              private pelvisGeom: number = 0) {}

  setPelvisGeom(i: number): void {
    this.pelvisGeom = i;
  }

  draw(frame: FrameMsg, terrain: [number, number][] | null): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    const pelvis = frame.bodies[this.pelvisGeom] ?? frame.bodies[0];
    if (pelvis) {
      this.camera = followCamera(this.camera, pelvis.pos[0], pelvis.pos[1]);
    }
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, width, height);

    if (terrain && terrain.length >= 2) {
      ctx.strokeStyle = "#4e6a4e";
      ctx.lineWidth = 2;
      ctx.beginPath();
      terrain.forEach(([x, y], i) => {
        const [sx, sy] = worldToScreen(this.camera, width, height, x, y);
        if (i === 0) ctx.moveTo(sx, sy);
        else ctx.lineTo(sx, sy);
      });
      ctx.stroke();
    }

    for (const b of frame.bodies) {
      ctx.strokeStyle = "#7aa2f7";
      ctx.fillStyle = "rgba(122,162,247,0.25)";
      if (b.shape === "sphere") {
        const [sx, sy] = worldToScreen(this.camera, width, height,
                                       b.pos[0], b.pos[1]);
        ctx.beginPath();
        ctx.arc(sx, sy, b.size[0] * this.camera.scale, 0, Math.PI * 2);
        ctx.fill();
        ctx.stroke();
      } else if (b.shape === "capsule") {
        const [[x0, y0], [x1, y1]] = capsuleEndpoints(b);
        const [sx0, sy0] = worldToScreen(this.camera, width, height, x0, y0);
        const [sx1, sy1] = worldToScreen(this.camera, width, height, x1, y1);
        ctx.lineWidth = Math.max(2 * b.size[0] * this.camera.scale, 2);
        ctx.lineCap = "round";
        ctx.beginPath();
        ctx.moveTo(sx0, sy0);
        ctx.lineTo(sx1, sy1);
        ctx.stroke();
        ctx.lineWidth = 2;
      } else if (b.shape === "box") {
        const corners = boxCorners2d(b);
        ctx.beginPath();
        corners.forEach(([x, y], i) => {
          const [sx, sy] = worldToScreen(this.camera, width, height, x, y);
          if (i === 0) ctx.moveTo(sx, sy);
          else ctx.lineTo(sx, sy);
        });
        ctx.closePath();
        ctx.fill();
        ctx.stroke();
      }
    }
    this.framesDrawn += 1;
  }
}
