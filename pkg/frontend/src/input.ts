import { ControlMessage } from "./protocol.js";
import { PanelState } from "./state.js";

/** Robot-frame azimuths for the four touch buttons. */
export const TOUCH_AZIMUTHS = {
  front: 0,
  left: Math.PI / 2,
  rear: Math.PI,
  right: -Math.PI / 2,
} as const;

export type TouchSide = keyof typeof TOUCH_AZIMUTHS;

const ARROWS: Record<string, [number, number]> = {
  ArrowUp: [0, 1],
  ArrowDown: [0, -1],
  ArrowLeft: [-1, 0],
  ArrowRight: [1, 0],
  w: [0, 1],
  s: [0, -1],
  a: [-1, 0],
  d: [1, 0],
};

/**
 * Turns operator gestures into control messages, and refuses the ones
 * the protocol would refuse anyway (stepping while running, driving
 * with nothing selected). Everything that passes goes to the server;
 * nothing is simulated locally.
 */
export class OperatorInput {
  driveSpeed = 1.0;
  touchForce = 6.0;
  private held = new Set<string>();
  private lastSent: [number, number] | null = null;

  constructor(
    private state: PanelState,
    private send: (msg: ControlMessage) => void,
  ) {}

  /** Unit direction from the held keys, scaled to driveSpeed. */
  private driveVector(): [number, number] {
    let dx = 0;
    let dy = 0;
    for (const key of this.held) {
      const [ax, ay] = ARROWS[key];
      dx += ax;
      dy += ay;
    }
    const norm = Math.hypot(dx, dy);
    if (norm === 0) return [0, 0];
    return [(dx / norm) * this.driveSpeed, (dy / norm) * this.driveSpeed];
  }

  keydown(key: string): boolean {
    if (!(key in ARROWS)) return false;
    if (this.held.has(key)) return true; // key repeat
    this.held.add(key);
    return this.pushDrive();
  }

  keyup(key: string): boolean {
    if (!this.held.delete(key)) return false;
    return this.pushDrive();
  }

  /** Emit teleop for the current key chord; idempotent per chord. */
  private pushDrive(): boolean {
    const human = this.state.selected;
    if (!human || !this.state.canSend()) return false;
    const [vx, vy] = this.driveVector();
    if (this.lastSent && this.lastSent[0] === vx && this.lastSent[1] === vy) {
      return false;
    }
    this.lastSent = [vx, vy];
    this.send({ kind: "teleop", human, vx, vy });
    return true;
  }

  /** Full stop for the selected human. */
  halt(): boolean {
    this.held.clear();
    return this.pushDrive();
  }

  touch(side: TouchSide): boolean {
    if (!this.state.canSend()) return false;
    this.send({ kind: "touch", azimuth: TOUCH_AZIMUTHS[side], force: this.touchForce });
    return true;
  }

  pause(): boolean {
    if (!this.state.canSend()) return false;
    this.send({ kind: "pause" });
    return true;
  }

  resume(): boolean {
    if (!this.state.canSend() || this.state.finished()) return false;
    this.send({ kind: "resume" });
    return true;
  }

  /** Step is only valid while paused; rejected here, not by the server. */
  step(): boolean {
    if (!this.state.canSend() || !this.state.paused() || this.state.finished()) {
      return false;
    }
    this.send({ kind: "step" });
    return true;
  }

  reset(): boolean {
    if (!this.state.canSend()) return false;
    this.send({ kind: "reset" });
    return true;
  }

  load(scenario: string): boolean {
    if (!this.state.canSend()) return false;
    this.send({ kind: "load", scenario });
    return true;
  }
}
