import { describe, expect, it } from "vitest";
import { parseServerFrame, rleDecode } from "../src/protocol.js";

// small deterministic PRNG so the loop below is reproducible
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("rleDecode", () => {
  it("expands simple runs", () => {
    expect(Array.from(rleDecode([3, 0, 2, 255], 5))).toEqual([0, 0, 0, 255, 255]);
    expect(Array.from(rleDecode([1, 7], 1))).toEqual([7]);
  });

  it("matches a naive expansion on random rows", () => {
    const rand = mulberry32(0xd1ff);
    for (let trial = 0; trial < 200; trial++) {
      const width = 1 + Math.floor(rand() * 64);
      const runs: number[] = [];
      const expected: number[] = [];
      let left = width;
      let prev = -1;
      while (left > 0) {
        const count = 1 + Math.floor(rand() * left);
        let value = Math.floor(rand() * 256);
        if (value === prev) value = (value + 1) % 256; // runs never repeat a value
        runs.push(count, value);
        for (let i = 0; i < count; i++) expected.push(value);
        prev = value;
        left -= count;
      }
      expect(Array.from(rleDecode(runs, width))).toEqual(expected);
    }
  });

  it("rejects odd-length run data", () => {
    expect(() => rleDecode([3, 0, 2], 5)).toThrow(/even length/);
  });

  it("rejects runs that expand to the wrong width", () => {
    expect(() => rleDecode([3, 0], 5)).toThrow(/expected/);
    expect(() => rleDecode([6, 0], 5)).toThrow(/past/);
  });
});

describe("parseServerFrame", () => {
  it("accepts the three frame kinds", () => {
    const snap = parseServerFrame(
      JSON.stringify({
        kind: "snapshot",
        seq: 1,
        version: 1,
        keyframe: false,
        tick: 4,
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
      }),
    );
    expect(snap.kind).toBe("snapshot");
    expect(parseServerFrame('{"kind": "ack", "seq": 2, "re": 1}').kind).toBe("ack");
    const err = parseServerFrame('{"kind": "error", "seq": 3, "re": null, "message": "nope"}');
    expect(err.kind).toBe("error");
  });

  it("throws on garbage instead of letting it into the view", () => {
    expect(() => parseServerFrame("not json")).toThrow(/JSON/);
    expect(() => parseServerFrame("[1,2]")).toThrow(/object/);
    expect(() => parseServerFrame('{"kind": "mystery", "seq": 1}')).toThrow(/unknown/);
    expect(() => parseServerFrame('{"kind": "ack"}')).toThrow(/seq/);
    expect(() =>
      parseServerFrame('{"kind": "snapshot", "seq": 1, "keyframe": true, "tick": 0, "rows": [], "robot": []}'),
    ).toThrow(/grid/);
  });
});
