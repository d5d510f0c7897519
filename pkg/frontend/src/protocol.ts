// Wire types for the serve protocol, mirroring docs/protocol.md in the
// simulator repo. The panel consumes exactly this surface and nothing else.

export const PROTOCOL_VERSION = 1;

export interface GridInfo {
  width: number;
  height: number;
  resolution: number;
  origin: [number, number];
}

export interface HumanView {
  id: string;
  x: number;
  y: number;
  theta: number;
  radius: number;
  class: string;
}

export interface RunReport {
  outcome: string;
  ticks: number;
  traveled: number;
  contacts: number;
  escalations: number;
  exit: string | null;
}

/** [cy, [count, value, count, value, ...]] */
export type CostRow = [number, number[]];

export interface Snapshot {
  kind: "snapshot";
  seq: number;
  version: number;
  keyframe: boolean;
  tick: number;
  paused: boolean;
  robot: [number, number, number];
  cmd: [number, number, number];
  humans: HumanView[];
  detected: string[];
  fsm: string;
  filter: string;
  tactile: number[];
  path: [number, number][] | null;
  escalations: [string, number, number, number][];
  report: RunReport | null;
  rows: CostRow[];
  // keyframe-only extras
  scenario?: string;
  grid?: GridInfo;
  goal?: [number, number, number] | null;
}

export interface Ack {
  kind: "ack";
  seq: number;
  re: number;
}

export interface ErrorFrame {
  kind: "error";
  seq: number;
  re: number | null;
  message: string;
}

export type ServerFrame = Snapshot | Ack | ErrorFrame;

export type ControlMessage =
  | { kind: "teleop"; human: string; vx: number; vy: number }
  | { kind: "touch"; azimuth: number; force: number }
  | { kind: "pause" }
  | { kind: "resume" }
  | { kind: "step" }
  | { kind: "reset" }
  | { kind: "load"; scenario: string | object };

/** Expand one run-length encoded cost row to exactly `width` cells. */
export function rleDecode(runs: number[], width: number): Uint8Array {
  if (runs.length % 2 !== 0) {
    throw new Error("run-length data must have even length");
  }
  const out = new Uint8Array(width);
  let at = 0;
  for (let i = 0; i < runs.length; i += 2) {
    const count = runs[i];
    const value = runs[i + 1];
    if (at + count > width) {
      throw new Error(`run-length data expands past ${width} cells`);
    }
    out.fill(value, at, at + count);
    at += count;
  }
  if (at !== width) {
    throw new Error(`run-length data expands to ${at} cells, expected ${width}`);
  }
  return out;
}

/**
 * Parse one server text frame. Throws on anything that is not a
 * well-formed frame; the caller drops the frame and shows the error
 * badge rather than letting bad data poison the view.
 */
export function parseServerFrame(text: string): ServerFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new Error("frame is not valid JSON");
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error("frame must be an object");
  }
  const frame = raw as Record<string, unknown>;
  if (typeof frame.seq !== "number") throw new Error("frame missing seq");
  switch (frame.kind) {
    case "ack":
      if (typeof frame.re !== "number") throw new Error("ack missing re");
      return frame as unknown as Ack;
    case "error":
      if (typeof frame.message !== "string") throw new Error("error missing message");
      return frame as unknown as ErrorFrame;
    case "snapshot": {
      const s = frame as unknown as Snapshot;
      if (typeof s.tick !== "number" || !Array.isArray(s.rows) || !Array.isArray(s.robot)) {
        throw new Error("malformed snapshot");
      }
      if (s.keyframe && !s.grid) throw new Error("keyframe missing grid");
      return s;
    }
    default:
      throw new Error(`unknown frame kind ${String(frame.kind)}`);
  }
}
