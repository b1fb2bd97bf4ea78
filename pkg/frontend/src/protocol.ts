// Message types for the UI socket (one JSON object per message).

export interface SpecMsg {
  type: "spec";
  obs_dim: number;
  act_dim: number;
  agents: number;
  env?: string;
  terrain?: [number, number][];
  decision_dt?: number;
  pelvis_geom?: number;
}

export interface BodyPose {
  id: number;
  pos: [number, number, number];
  quat: [number, number, number, number]; // w, x, y, z
  shape: "sphere" | "capsule" | "box" | "plane";
  size: number[];
}

export interface Hud {
  reward: number;
  vx: number;
  goal: string;
}

export interface FrameMsg {
  type: "frame";
  t: number;
  bodies: BodyPose[];
  hud: Hud;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  msg: string;
}

export type ServerMsg = SpecMsg | FrameMsg | ErrorMsg;

export type Goal =
  | "left"
  | "right"
  | "stationary"
  | "jump"
  | "jump_left"
  | "jump_right";

export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const t = (data as { type?: unknown }).type;
  if (t === "spec" || t === "frame" || t === "error") {
    return data as ServerMsg;
  }
  return null;
}

export function goalCommand(goal: Goal): string {
  return JSON.stringify({ cmd: "goal", value: goal });
}
