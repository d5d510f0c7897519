import { describe, expect, it } from "vitest";
import { Snapshot } from "../src/protocol.js";
import { PanelState } from "../src/state.js";

function snap(over: Partial<Snapshot>): Snapshot {
  return {
    kind: "snapshot",
    seq: 1,
    version: 1,
    keyframe: false,
    tick: 1,
    paused: true,
    robot: [0.5, 0.5, 0],
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

function keyframe(over: Partial<Snapshot> = {}): Snapshot {
  // 4x3 grid, rows: bottom 0s, middle ramp, top lethal
  return snap({
    keyframe: true,
    scenario: "t",
    grid: { width: 4, height: 3, resolution: 0.1, origin: [0, 0] },
    goal: [0.35, 0.25, 0.15],
    rows: [
      [0, [4, 0]],
      [1, [2, 10, 2, 120]],
      [2, [4, 255]],
    ],
    ...over,
  });
}

describe("PanelState.applySnapshot", () => {
  it("adopts grid and cost from a keyframe", () => {
    const st = new PanelState();
    const dirty = st.applySnapshot(keyframe());
    expect(dirty).toEqual([0, 1, 2]);
    expect(st.scenario).toBe("t");
    expect(st.goal).toEqual([0.35, 0.25, 0.15]);
    expect(Array.from(st.cost!)).toEqual([0, 0, 0, 0, 10, 10, 120, 120, 255, 255, 255, 255]);
  });

  it("applies diffs to retained rows only", () => {
    const st = new PanelState();
    st.applySnapshot(keyframe());
    const dirty = st.applySnapshot(snap({ seq: 2, tick: 2, rows: [[1, [1, 0, 3, 200]]] }));
    expect(dirty).toEqual([1]);
    expect(Array.from(st.cost!)).toEqual([0, 0, 0, 0, 0, 200, 200, 200, 255, 255, 255, 255]);
  });

  it("discards stale sequence numbers outright", () => {
    const st = new PanelState();
    st.applySnapshot(keyframe());
    st.applySnapshot(snap({ seq: 5, tick: 9 }));
    // an out-of-order frame arrives late: nothing about the view moves
    expect(st.applySnapshot(snap({ seq: 3, tick: 3, rows: [[0, [4, 99]]] }))).toBeNull();
    expect(st.snap!.tick).toBe(9);
    expect(st.cost![0]).toBe(0);
  });

  it("ignores diffs that arrive before any keyframe", () => {
    const st = new PanelState();
    expect(st.applySnapshot(snap({ rows: [[0, [4, 1]]] }))).toBeNull();
    expect(st.cost).toBeNull();
  });

  it("a later keyframe rebuilds the grid from scratch", () => {
    const st = new PanelState();
    st.applySnapshot(keyframe());
    st.applySnapshot(snap({ seq: 2, rows: [[0, [4, 50]]] }));
    const kf2 = keyframe({
      seq: 3,
      grid: { width: 2, height: 2, resolution: 0.1, origin: [0, 0] },
      rows: [
        [0, [2, 1]],
        [1, [2, 2]],
      ],
    });
    expect(st.applySnapshot(kf2)).toEqual([0, 1]);
    expect(Array.from(st.cost!)).toEqual([1, 1, 2, 2]);
  });

  it("reconnect accepts the fresh keyframe even at lower seq", () => {
    const st = new PanelState();
    st.applySnapshot(keyframe({ seq: 40 }));
    st.setConnection("closed");
    st.setConnection("open");
    // new connection, new server-side counter
    expect(st.applySnapshot(keyframe({ seq: 1, tick: 41 }))).toEqual([0, 1, 2]);
    expect(st.snap!.tick).toBe(41);
  });

  it("drops the selection when the human disappears", () => {
    const st = new PanelState();
    st.applySnapshot(keyframe());
    st.selected = "h1";
    st.applySnapshot(
      snap({
        seq: 2,
        humans: [{ id: "h1", x: 1, y: 1, theta: 0, radius: 0.3, class: "adult" }],
      }),
    );
    expect(st.selected).toBe("h1");
    st.applySnapshot(snap({ seq: 3, humans: [] }));
    expect(st.selected).toBeNull();
  });
});

describe("gating helpers", () => {
  it("canSend needs an open connection and the operator role", () => {
    const st = new PanelState();
    st.setConnection("open");
    expect(st.canSend()).toBe(true);
    st.role = "viewer";
    expect(st.canSend()).toBe(false);
    st.role = "operator";
    st.setConnection("closed");
    expect(st.canSend()).toBe(false);
  });

  it("finished follows the report field", () => {
    const st = new PanelState();
    st.applySnapshot(keyframe());
    expect(st.finished()).toBe(false);
    st.applySnapshot(
      snap({
        seq: 2,
        report: { outcome: "GoalReached", ticks: 9, traveled: 1, contacts: 0, escalations: 0, exit: null },
      }),
    );
    expect(st.finished()).toBe(true);
  });
});
