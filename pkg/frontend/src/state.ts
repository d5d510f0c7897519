import { GridInfo, Snapshot, rleDecode } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";
export type Role = "operator" | "viewer";

export interface Camera {
  // world point at the canvas centre, plus pixels per metre
  x: number;
  y: number;
  scale: number;
}

export interface Overlays {
  costmap: boolean;
  path: boolean;
  fov: boolean;
  plates: boolean;
}

/**
 * Everything the renderer needs, and nothing the server does not know.
 * The panel holds no simulation state of its own: closing and reopening
 * mid-run rebuilds an identical view from the next keyframe.
 */
export class PanelState {
  connection: Connection = "connecting";
  role: Role = "operator";
  seq = -1;
  snap: Snapshot | null = null;
  grid: GridInfo | null = null;
  cost: Uint8Array | null = null; // row-major, row 0 at the world origin
  scenario: string | null = null;
  goal: [number, number, number] | null = null;
  selected: string | null = null;
  camera: Camera = { x: 0, y: 0, scale: 60 };
  overlays: Overlays = { costmap: true, path: true, fov: false, plates: true };
  lastError: string | null = null;

  /**
   * Apply one snapshot. Returns the list of changed row indices, or
   * null when the snapshot was stale and discarded. A keyframe replaces
   * the retained grid outright (every row is "changed").
   */
  applySnapshot(s: Snapshot): number[] | null {
    if (s.seq <= this.seq) return null; // stale: view reflects highest seq only
    this.seq = s.seq;
    this.snap = s;

    if (s.keyframe) {
      const g = s.grid!;
      this.grid = g;
      this.scenario = s.scenario ?? this.scenario;
      this.goal = s.goal ?? null;
      this.cost = new Uint8Array(g.width * g.height);
      if (this.camera.x === 0 && this.camera.y === 0) {
        this.camera.x = g.origin[0] + (g.width * g.resolution) / 2;
        this.camera.y = g.origin[1] + (g.height * g.resolution) / 2;
      }
    }
    if (!this.grid || !this.cost) return null; // diff before any keyframe

    const dirty: number[] = [];
    for (const [cy, runs] of s.rows) {
      const row = rleDecode(runs, this.grid.width);
      this.cost.set(row, cy * this.grid.width);
      dirty.push(cy);
    }
    if (this.selected && !s.humans.some((h) => h.id === this.selected)) {
      this.selected = null;
    }
    return dirty;
  }

  setConnection(c: Connection): void {
    this.connection = c;
    if (c !== "open") this.seq = -1; // the next keyframe rebuilds the grid
  }

  /** Operator inputs are live only on an open, unfinished session. */
  canSend(): boolean {
    return this.connection === "open" && this.role === "operator";
  }

  paused(): boolean {
    return this.snap?.paused ?? false;
  }

  finished(): boolean {
    return this.snap?.report != null;
  }
}
