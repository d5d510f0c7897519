import { beforeEach, describe, expect, it } from "vitest";
import { OperatorInput } from "../src/input.js";
import { ControlMessage, Snapshot } from "../src/protocol.js";
import { PanelState } from "../src/state.js";

let state: PanelState;
let sent: ControlMessage[];
let input: OperatorInput;

function live(over: Partial<Snapshot> = {}): void {
  state.setConnection("open");
  state.snap = {
    kind: "snapshot",
    seq: 1,
    version: 1,
    keyframe: false,
    tick: 1,
    paused: false,
    robot: [0, 0, 0],
    cmd: [0, 0, 0],
    humans: [],
    detected: [],
    fsm: "Navigate",
    filter: "PASS",
    tactile: [0, 0, 0, 0, 0, 0],
    path: null,
    escalations: [],
    report: null,
    rows: [],
    ...over,
  };
}

beforeEach(() => {
  state = new PanelState();
  sent = [];
  input = new OperatorInput(state, (msg) => sent.push(msg));
});

describe("driving the selected human", () => {
  it("maps a single arrow to a unit direction at drive speed", () => {
    live();
    state.selected = "h1";
    input.driveSpeed = 0.8;
    input.keydown("ArrowUp");
    expect(sent).toEqual([{ kind: "teleop", human: "h1", vx: 0, vy: 0.8 }]);
  });

  it("normalizes diagonals instead of stacking speeds", () => {
    live();
    state.selected = "h1";
    input.driveSpeed = 1.0;
    input.keydown("ArrowUp");
    input.keydown("ArrowLeft");
    const last = sent[sent.length - 1] as { vx: number; vy: number };
    expect(Math.hypot(last.vx, last.vy)).toBeCloseTo(1.0, 12);
    expect(last.vx).toBeCloseTo(-Math.SQRT1_2, 12);
    expect(last.vy).toBeCloseTo(Math.SQRT1_2, 12);
  });

  it("opposite keys cancel and releasing everything stops", () => {
    live();
    state.selected = "h1";
    input.keydown("ArrowUp");
    input.keydown("ArrowDown");
    let last = sent[sent.length - 1] as { vx: number; vy: number };
    expect([last.vx, last.vy]).toEqual([0, 0]);
    input.keyup("ArrowUp");
    input.keyup("ArrowDown");
    last = sent[sent.length - 1] as { vx: number; vy: number };
    expect([last.vx, last.vy]).toEqual([0, 0]);
  });

  it("does not spam identical chords on key repeat", () => {
    live();
    state.selected = "h1";
    input.keydown("w");
    input.keydown("w");
    input.keydown("w");
    expect(sent).toHaveLength(1);
  });

  it("sends nothing with no human selected", () => {
    live();
    input.keydown("ArrowUp");
    expect(sent).toEqual([]);
  });

  it("sends nothing as a read-only viewer", () => {
    live();
    state.role = "viewer";
    state.selected = "h1";
    input.keydown("ArrowUp");
    expect(sent).toEqual([]);
  });

  it("sends nothing while disconnected", () => {
    live();
    state.selected = "h1";
    state.setConnection("closed");
    input.keydown("ArrowUp");
    expect(sent).toEqual([]);
  });
});

describe("touch buttons", () => {
  it("rear touch lands on the back of the ring", () => {
    live();
    input.touch("rear");
    expect(sent).toEqual([{ kind: "touch", azimuth: Math.PI, force: 6.0 }]);
  });

  it("front touch is azimuth zero", () => {
    live();
    input.touch("front");
    expect((sent[0] as { azimuth: number }).azimuth).toBe(0);
  });
});

describe("session controls", () => {
  it("step is refused client-side while running", () => {
    live({ paused: false });
    expect(input.step()).toBe(false);
    expect(sent).toEqual([]);
  });

  it("step goes through while paused", () => {
    live({ paused: true });
    expect(input.step()).toBe(true);
    expect(sent).toEqual([{ kind: "step" }]);
  });

  it("step and resume are refused once the run finished", () => {
    live({
      paused: true,
      report: { outcome: "GoalReached", ticks: 5, traveled: 1, contacts: 0, escalations: 0, exit: null },
    });
    expect(input.step()).toBe(false);
    expect(input.resume()).toBe(false);
    expect(sent).toEqual([]);
  });

  it("pause and reset map one-to-one", () => {
    live();
    input.pause();
    input.reset();
    expect(sent).toEqual([{ kind: "pause" }, { kind: "reset" }]);
  });
});
