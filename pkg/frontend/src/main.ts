import { OperatorInput, TouchSide } from "./input.js";
import { SocketClient } from "./net.js";
import { ServerFrame } from "./protocol.js";
import { Renderer, screenToWorld } from "./render.js";
import { PanelState } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const params = new URLSearchParams(location.search);
const wsUrl =
  params.get("ws") ?? `ws://${location.hostname || "localhost"}:${params.get("port") ?? "8000"}/ws`;

const state = new PanelState();
if (params.get("viewer") === "1") state.role = "viewer";

const canvas = el<HTMLCanvasElement>("view");
const renderer = new Renderer(canvas);
const banner = el<HTMLDivElement>("banner");
const status = el<HTMLSpanElement>("status");
const problem = el<HTMLSpanElement>("problem");

let needsDraw = true;
function invalidate(): void {
  needsDraw = true;
}

let problemTimer: number | undefined;
function showProblem(message: string): void {
  problem.textContent = message;
  problem.classList.add("visible");
  clearTimeout(problemTimer);
  problemTimer = window.setTimeout(() => problem.classList.remove("visible"), 4000);
}

function onFrame(frame: ServerFrame): void {
  if (frame.kind !== "snapshot") return;
  const dirty = state.applySnapshot(frame);
  if (dirty === null) return; // stale or pre-keyframe; nothing changed
  renderer.updateRows(state, dirty);
  refreshHud();
  invalidate();
}

const client = new SocketClient(wsUrl, {
  frame: onFrame,
  status: (s) => {
    state.setConnection(s);
    refreshHud();
    invalidate();
  },
  problem: showProblem,
});
const input = new OperatorInput(state, (msg) => client.send(msg));

// -- HUD ---------------------------------------------------------------

const buttons = {
  pause: el<HTMLButtonElement>("pause"),
  resume: el<HTMLButtonElement>("resume"),
  step: el<HTMLButtonElement>("step"),
  reset: el<HTMLButtonElement>("reset"),
};

function refreshHud(): void {
  const snap = state.snap;
  status.textContent =
    state.connection === "open"
      ? `${state.scenario ?? "?"} · tick ${snap?.tick ?? 0}`
      : state.connection;
  banner.classList.toggle("offline", state.connection !== "open");
  banner.textContent =
    state.connection !== "open"
      ? "connection lost, retrying"
      : snap?.report
        ? `${snap.report.outcome} after ${snap.report.ticks} ticks` +
          (snap.report.exit ? ` via ${snap.report.exit} exit` : "")
        : `${snap?.fsm ?? ""} · filter ${snap?.filter ?? ""}` +
          (snap?.paused ? " · paused" : "") +
          (state.selected ? ` · driving ${state.selected}` : "");
  const live = state.canSend();
  buttons.pause.disabled = !live || state.paused();
  buttons.resume.disabled = !live || !state.paused() || state.finished();
  buttons.step.disabled = !live || !state.paused() || state.finished();
  buttons.reset.disabled = !live;
  for (const b of document.querySelectorAll<HTMLButtonElement>(".touch")) {
    b.disabled = !live;
  }
}

buttons.pause.onclick = () => input.pause();
buttons.resume.onclick = () => input.resume();
buttons.step.onclick = () => input.step();
buttons.reset.onclick = () => input.reset();
for (const b of document.querySelectorAll<HTMLButtonElement>(".touch")) {
  b.onclick = () => input.touch(b.dataset.side as TouchSide);
}
el<HTMLInputElement>("ov-cost").onchange = (e) => {
  state.overlays.costmap = (e.target as HTMLInputElement).checked;
  invalidate();
};
el<HTMLInputElement>("ov-path").onchange = (e) => {
  state.overlays.path = (e.target as HTMLInputElement).checked;
  invalidate();
};
el<HTMLInputElement>("ov-fov").onchange = (e) => {
  state.overlays.fov = (e.target as HTMLInputElement).checked;
  invalidate();
};
el<HTMLInputElement>("ov-plates").onchange = (e) => {
  state.overlays.plates = (e.target as HTMLInputElement).checked;
  invalidate();
};

// -- pointer: select humans, pan, zoom ---------------------------------

let dragging = false;
let moved = false;
let lastPointer = { x: 0, y: 0 };

canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  moved = false;
  lastPointer = { x: e.offsetX, y: e.offsetY };
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointermove", (e) => {
  if (!dragging) return;
  const dx = e.offsetX - lastPointer.x;
  const dy = e.offsetY - lastPointer.y;
  if (Math.abs(dx) + Math.abs(dy) > 2) moved = true;
  state.camera.x -= dx / state.camera.scale;
  state.camera.y += dy / state.camera.scale;
  lastPointer = { x: e.offsetX, y: e.offsetY };
  invalidate();
});
canvas.addEventListener("pointerup", (e) => {
  dragging = false;
  if (moved) return;
  // plain click: select the human under the pointer, or clear
  const w = screenToWorld(e.offsetX, e.offsetY, state.camera, canvas.width, canvas.height);
  const hit = state.snap?.humans.find((h) => Math.hypot(h.x - w.x, h.y - w.y) <= h.radius + 0.1);
  input.halt();
  state.selected = hit?.id ?? null;
  refreshHud();
  invalidate();
});
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  const factor = Math.exp(-e.deltaY / 400);
  state.camera.scale = Math.max(8, Math.min(300, state.camera.scale * factor));
  invalidate();
});

window.addEventListener("keydown", (e) => {
  if (e.repeat) return;
  if (e.key === " ") {
    e.preventDefault();
    if (state.paused()) input.resume();
    else input.pause();
    return;
  }
  if (e.key === "n") {
    input.step();
    return;
  }
  if (input.keydown(e.key)) e.preventDefault();
});
window.addEventListener("keyup", (e) => {
  input.keyup(e.key);
});
window.addEventListener("blur", () => input.halt());

// -- loop --------------------------------------------------------------

function frameLoop(): void {
  if (needsDraw) {
    needsDraw = false;
    renderer.draw(state);
  }
  requestAnimationFrame(frameLoop);
}

client.connect();
refreshHud();
requestAnimationFrame(frameLoop);
