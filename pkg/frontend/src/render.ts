import { GridInfo, HumanView } from "./protocol.js";
import { Camera, PanelState } from "./state.js";

// Cost color convention: permeable cost is the purple family, lethal
// (254/255) the cyan family, so a human you may brush past never looks
// like a wall.
export function costColor(v: number): [number, number, number] {
  if (v === 0) return [16, 16, 24];
  if (v >= 254) {
    return v === 255 ? [30, 255, 255] : [0, 205, 215];
  }
  const t = v / 253;
  return [
    Math.round(40 + 190 * t),
    Math.round(10 + 40 * t),
    Math.round(70 + 160 * t),
  ];
}

const CLASS_COLORS: Record<string, string> = {
  adult: "#e8b84b",
  child: "#7bd46a",
  elderly: "#d98fe0",
  staff: "#6aaef5",
};

export function classColor(cls: string): string {
  return CLASS_COLORS[cls] ?? "#cccccc";
}

/**
 * The grid heatmap as a raw RGBA buffer, repainted row-by-row from
 * snapshot diffs. Rows the server did not send are never rewritten,
 * which is what keeps a 200x200 grid cheap at 20 Hz.
 */
export class Heatmap {
  readonly rgba: Uint8ClampedArray<ArrayBuffer>;

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.rgba = new Uint8ClampedArray(new ArrayBuffer(width * height * 4));
  }

  /** Repaint the given rows from the cost grid (row 0 = world origin). */
  paintRows(cost: Uint8Array, rows: number[]): void {
    for (const cy of rows) {
      let px = cy * this.width * 4;
      let at = cy * this.width;
      for (let cx = 0; cx < this.width; cx++, at++, px += 4) {
        const [r, g, b] = costColor(cost[at]);
        this.rgba[px] = r;
        this.rgba[px + 1] = g;
        this.rgba[px + 2] = b;
        this.rgba[px + 3] = 255;
      }
    }
  }
}

export interface ScreenPoint {
  x: number;
  y: number;
}

/** World metres to canvas pixels. World y is up; canvas y is down. */
export function worldToScreen(
  wx: number,
  wy: number,
  cam: Camera,
  cw: number,
  ch: number,
): ScreenPoint {
  return {
    x: cw / 2 + (wx - cam.x) * cam.scale,
    y: ch / 2 - (wy - cam.y) * cam.scale,
  };
}

export function screenToWorld(
  sx: number,
  sy: number,
  cam: Camera,
  cw: number,
  ch: number,
): ScreenPoint {
  return {
    x: cam.x + (sx - cw / 2) / cam.scale,
    y: cam.y - (sy - ch / 2) / cam.scale,
  };
}

const PLATE_COUNT = 6;

/** Robot-frame azimuth of tactile plate i, matching the sensor ring. */
export function plateAzimuth(i: number): number {
  return (2 * Math.PI * i) / PLATE_COUNT;
}

/**
 * Canvas renderer. Owns an offscreen grid-resolution canvas for the
 * heatmap and blits it scaled under everything else each frame.
 */
export class Renderer {
  private ctx: CanvasRenderingContext2D;
  private heat: Heatmap | null = null;
  private heatCanvas: HTMLCanvasElement | null = null;
  private heatCtx: CanvasRenderingContext2D | null = null;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  /** Rebuild the offscreen heatmap for a new grid (keyframe). */
  private ensureHeat(grid: GridInfo): Heatmap {
    if (!this.heat || this.heat.width !== grid.width || this.heat.height !== grid.height) {
      this.heat = new Heatmap(grid.width, grid.height);
      this.heatCanvas = document.createElement("canvas");
      this.heatCanvas.width = grid.width;
      this.heatCanvas.height = grid.height;
      this.heatCtx = this.heatCanvas.getContext("2d");
    }
    return this.heat;
  }

  /** Apply a snapshot's changed rows to the offscreen heatmap. */
  updateRows(state: PanelState, dirty: number[]): void {
    if (!state.grid || !state.cost) return;
    const heat = this.ensureHeat(state.grid);
    heat.paintRows(state.cost, dirty);
    if (this.heatCtx) {
      const img = new ImageData(heat.rgba, heat.width, heat.height);
      this.heatCtx.putImageData(img, 0, 0);
    }
  }

  draw(state: PanelState): void {
    const { ctx, canvas } = this;
    const cw = canvas.width;
    const ch = canvas.height;
    ctx.fillStyle = "#0b0e14";
    ctx.fillRect(0, 0, cw, ch);
    const snap = state.snap;
    const grid = state.grid;
    if (!snap || !grid) return;
    const cam = state.camera;

    if (state.overlays.costmap && this.heatCanvas) {
      // the heatmap's row 0 is the world origin row, so it draws y-flipped
      const [ox, oy] = grid.origin;
      const top = worldToScreen(ox, oy + grid.height * grid.resolution, cam, cw, ch);
      const wpx = grid.width * grid.resolution * cam.scale;
      const hpx = grid.height * grid.resolution * cam.scale;
      ctx.save();
      ctx.imageSmoothingEnabled = false;
      ctx.translate(top.x, top.y + hpx);
      ctx.scale(1, -1);
      ctx.drawImage(this.heatCanvas, 0, 0, wpx, hpx);
      ctx.restore();
    }

    if (state.goal) this.drawGoal(state.goal, cam, cw, ch);
    if (state.overlays.path && snap.path) this.drawPath(snap.path, cam, cw, ch);
    for (const [, ex, ey, er] of snap.escalations) {
      this.circle(ex, ey, er, cam, cw, ch, "rgba(255, 80, 80, 0.9)", true);
    }
    for (const h of snap.humans) this.drawHuman(h, state, cam, cw, ch);
    this.drawRobot(state, cam, cw, ch);
  }

  private circle(
    wx: number,
    wy: number,
    wr: number,
    cam: Camera,
    cw: number,
    ch: number,
    style: string,
    dashed = false,
  ): void {
    const { ctx } = this;
    const p = worldToScreen(wx, wy, cam, cw, ch);
    ctx.beginPath();
    ctx.arc(p.x, p.y, wr * cam.scale, 0, 2 * Math.PI);
    ctx.strokeStyle = style;
    ctx.lineWidth = 2;
    ctx.setLineDash(dashed ? [6, 4] : []);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  private drawGoal(goal: [number, number, number], cam: Camera, cw: number, ch: number): void {
    const [gx, gy, tol] = goal;
    this.circle(gx, gy, tol, cam, cw, ch, "#47d667");
    const p = worldToScreen(gx, gy, cam, cw, ch);
    this.ctx.fillStyle = "#47d667";
    this.ctx.fillRect(p.x - 2, p.y - 2, 4, 4);
  }

  private drawPath(path: [number, number][], cam: Camera, cw: number, ch: number): void {
    if (path.length === 0) return;
    const { ctx } = this;
    ctx.beginPath();
    path.forEach(([wx, wy], i) => {
      const p = worldToScreen(wx, wy, cam, cw, ch);
      if (i === 0) ctx.moveTo(p.x, p.y);
      else ctx.lineTo(p.x, p.y);
    });
    ctx.strokeStyle = "rgba(110, 235, 131, 0.85)";
    ctx.lineWidth = 2;
    ctx.stroke();
  }

  private drawHuman(h: HumanView, state: PanelState, cam: Camera, cw: number, ch: number): void {
    const { ctx } = this;
    const p = worldToScreen(h.x, h.y, cam, cw, ch);
    const r = h.radius * cam.scale;
    ctx.beginPath();
    ctx.arc(p.x, p.y, r, 0, 2 * Math.PI);
    ctx.fillStyle = classColor(h.class);
    ctx.globalAlpha = 0.85;
    ctx.fill();
    ctx.globalAlpha = 1;
    // heading tick
    ctx.beginPath();
    ctx.moveTo(p.x, p.y);
    ctx.lineTo(p.x + r * Math.cos(h.theta), p.y - r * Math.sin(h.theta));
    ctx.strokeStyle = "#111";
    ctx.lineWidth = 2;
    ctx.stroke();
    if (state.snap?.detected.includes(h.id)) {
      this.circle(h.x, h.y, h.radius + 0.06, cam, cw, ch, "#ffffff");
    }
    if (state.selected === h.id) {
      this.circle(h.x, h.y, h.radius + 0.12, cam, cw, ch, "#ffd747", true);
    }
    ctx.fillStyle = "#e6e6e6";
    ctx.font = "11px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(h.id, p.x, p.y - r - 5);
  }

  private drawRobot(state: PanelState, cam: Camera, cw: number, ch: number): void {
    const snap = state.snap!;
    const [rx, ry, theta] = snap.robot;
    const { ctx } = this;
    const p = worldToScreen(rx, ry, cam, cw, ch);
    const radius = 0.3 * cam.scale;

    if (state.overlays.fov) {
      const half = Math.PI * (70 / 360);
      ctx.beginPath();
      ctx.moveTo(p.x, p.y);
      ctx.arc(p.x, p.y, 3.5 * cam.scale, -(theta + half), -(theta - half));
      ctx.closePath();
      ctx.fillStyle = "rgba(106, 174, 245, 0.08)";
      ctx.fill();
    }

    ctx.beginPath();
    ctx.arc(p.x, p.y, radius, 0, 2 * Math.PI);
    ctx.fillStyle = "#d5dbe8";
    ctx.fill();
    ctx.beginPath();
    ctx.moveTo(p.x, p.y);
    ctx.lineTo(p.x + radius * Math.cos(theta), p.y - radius * Math.sin(theta));
    ctx.strokeStyle = "#0b0e14";
    ctx.lineWidth = 3;
    ctx.stroke();

    if (state.overlays.plates) {
      // plate force ticks stick out where the ring is being pressed
      snap.tactile.forEach((force, i) => {
        if (force <= 0) return;
        const az = theta + plateAzimuth(i);
        const len = radius * (0.3 + Math.min(force / 10, 1.2));
        ctx.beginPath();
        ctx.moveTo(p.x + radius * Math.cos(az), p.y - radius * Math.sin(az));
        ctx.lineTo(p.x + (radius + len) * Math.cos(az), p.y - (radius + len) * Math.sin(az));
        ctx.strokeStyle = "#ff4d4f";
        ctx.lineWidth = 3;
        ctx.stroke();
      });
    }
  }
}
