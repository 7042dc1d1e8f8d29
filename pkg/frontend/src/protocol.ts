/** Wire types for the control service websocket, field names as on the wire. */

export type Mode = "manual" | "autonomous";

export interface Pose {
  x: number;
  y: number;
  yaw: number;
}

export interface Command {
  linear: number;
  angular: number;
  fork: number;
}

export interface Match {
  index: number;
  scores: Record<string, number>;
  command: Command;
}

export interface StateFrame {
  type: "state";
  tick: number;
  image_ppm_b64: string;
  distances: number[];
  pose: Pose;
  mode: Mode;
  recording: boolean;
  match: Match | null;
}

export interface ErrorFrame {
  type: "error";
  error: string;
}

export type ServerFrame = StateFrame | ErrorFrame;

export class ProtocolError extends Error {}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function num(v: unknown, what: string): number {
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ProtocolError(`${what} is not a finite number`);
  }
  return v;
}

function parsePose(v: unknown): Pose {
  if (!isRecord(v)) throw new ProtocolError("pose is not an object");
  return { x: num(v.x, "pose.x"), y: num(v.y, "pose.y"), yaw: num(v.yaw, "pose.yaw") };
}

function parseCommand(v: unknown): Command {
  if (!isRecord(v)) throw new ProtocolError("command is not an object");
  return {
    linear: num(v.linear, "command.linear"),
    angular: num(v.angular, "command.angular"),
    fork: num(v.fork, "command.fork"),
  };
}

function parseMatch(v: unknown): Match | null {
  if (v === null || v === undefined) return null;
  if (!isRecord(v)) throw new ProtocolError("match is not an object");
  if (!isRecord(v.scores)) throw new ProtocolError("match.scores is not an object");
  const scores: Record<string, number> = {};
  for (const [name, score] of Object.entries(v.scores)) {
    scores[name] = num(score, `match.scores.${name}`);
  }
  return { index: num(v.index, "match.index"), scores, command: parseCommand(v.command) };
}

export function parseServerFrame(raw: string): ServerFrame {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch (e) {
    throw new ProtocolError(`frame is not JSON: ${e}`);
  }
  if (!isRecord(data)) throw new ProtocolError("frame is not an object");

  if (data.type === "error") {
    return { type: "error", error: String(data.error ?? "unknown error") };
  }
  if (data.type !== "state") {
    throw new ProtocolError(`unknown frame type ${JSON.stringify(data.type)}`);
  }
  if (typeof data.image_ppm_b64 !== "string") {
    throw new ProtocolError("image_ppm_b64 is not a string");
  }
  if (!Array.isArray(data.distances)) throw new ProtocolError("distances is not an array");
  const distances = data.distances.map((d, i) => num(d, `distances[${i}]`));
  if (data.mode !== "manual" && data.mode !== "autonomous") {
    throw new ProtocolError(`unknown mode ${JSON.stringify(data.mode)}`);
  }
  if (typeof data.recording !== "boolean") throw new ProtocolError("recording is not a boolean");
  return {
    type: "state",
    tick: num(data.tick, "tick"),
    image_ppm_b64: data.image_ppm_b64,
    distances,
    pose: parsePose(data.pose),
    mode: data.mode,
    recording: data.recording,
    match: parseMatch(data.match),
  };
}

export function commandMessage(command: Command): string {
  return JSON.stringify({
    type: "command",
    linear: command.linear,
    angular: command.angular,
    fork: command.fork,
  });
}

export function setModeMessage(mode: Mode): string {
  return JSON.stringify({ type: "set_mode", mode });
}

export function recordMessage(action: "start" | "stop"): string {
  return JSON.stringify({ type: "record", action });
}
