// Page wiring: hand panel streaming frames to /feed, cursor mirror on
// /cursor, target task panel. Server picked via ?server=ws://host:port.

import { BOX_MAX, BOX_MIN, VirtualHand } from "./hand.js";
import { CursorMirror } from "./mirror.js";
import { FINGER_NAMES, FingerName, encodeFrame, encodeHello } from "./protocol.js";
import { TargetTask } from "./task.js";

const params = new URLSearchParams(location.search);
const serverBase = params.get("server") ?? "ws://127.0.0.1:8765";
const frameRate = Number(params.get("rate") ?? 120);
const screenW = Number(params.get("width") ?? 1920);
const screenH = Number(params.get("height") ?? 1080);

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const handCanvas = $<HTMLCanvasElement>("hand-panel");
const mirrorCanvas = $<HTMLCanvasElement>("mirror-panel");
const taskCanvas = $<HTMLCanvasElement>("task-panel");
const feedStatus = $<HTMLSpanElement>("feed-status");
const cursorStatus = $<HTMLSpanElement>("cursor-status");
const scrollTicker = $<HTMLSpanElement>("scroll-ticker");
const fingerBar = $<HTMLSpanElement>("finger-bar");
const depthSlider = $<HTMLInputElement>("depth");

const hand = new VirtualHand();
const mirror = new CursorMirror();

// ---- feed: pointer -> frames ------------------------------------------------

let feedSocket: WebSocket | null = null;
let feedOpen = false;
const streamStartMs = performance.now();

function connectFeed() {
  const ws = new WebSocket(`${serverBase}/feed`);
  feedSocket = ws;
  ws.onopen = () => {
    feedOpen = true;
    ws.send(encodeHello("feed", "webui-hand"));
    feedStatus.textContent = "feed: connected";
    feedStatus.className = "ok";
  };
  ws.onclose = () => {
    feedOpen = false;
    feedStatus.textContent = "feed: disconnected (frames dropped)";
    feedStatus.className = "bad";
    setTimeout(connectFeed, 1000);
  };
  ws.onerror = () => ws.close();
}

handCanvas.addEventListener("pointermove", (ev) => {
  const rect = handCanvas.getBoundingClientRect();
  hand.setPointer(ev.clientX - rect.left, ev.clientY - rect.top, rect.width, rect.height, Number(depthSlider.value));
});
handCanvas.addEventListener(
  "wheel",
  (ev) => {
    ev.preventDefault();
    const v = Math.min(1, Math.max(0, Number(depthSlider.value) - Math.sign(ev.deltaY) * 0.05));
    depthSlider.value = String(v);
  },
  { passive: false }
);

window.addEventListener("keydown", (ev) => {
  const idx = Number(ev.key);
  if (idx >= 1 && idx <= 5) hand.toggleFinger(FINGER_NAMES[idx - 1] as FingerName);
  else if (ev.key === "o") hand.openHand();
  else if (ev.key === "f") hand.fist();
  else if (ev.key === " ") {
    ev.preventDefault();
    hand.startTap(performance.now());
  }
  renderFingerBar();
});

$("btn-tap").addEventListener("click", () => hand.startTap(performance.now()));
$("btn-open").addEventListener("click", () => { hand.openHand(); renderFingerBar(); });
$("btn-fist").addEventListener("click", () => { hand.fist(); renderFingerBar(); });
for (const dir of ["ccw", "cw"] as const) {
  const btn = $(`btn-circle-${dir}`);
  btn.addEventListener("pointerdown", () => hand.startCircle(dir, performance.now()));
  btn.addEventListener("pointerup", () => hand.stopCircle());
  btn.addEventListener("pointerleave", () => hand.stopCircle());
}

function renderFingerBar() {
  fingerBar.textContent = FINGER_NAMES.map((n, i) => `${i + 1}:${hand.extended.has(n) ? n : "-"}`).join("  ");
}

setInterval(() => {
  const pose = hand.frameAt(performance.now(), streamStartMs);
  if (feedOpen && feedSocket && feedSocket.readyState === WebSocket.OPEN) {
    feedSocket.send(encodeFrame(pose));
  }
}, 1000 / frameRate);

// ---- mirror: /cursor subscriber ----------------------------------------------

function connectCursor() {
  const ws = new WebSocket(`${serverBase}/cursor`);
  ws.onopen = () => {
    ws.send(encodeHello("client", "webui-mirror"));
    mirror.onOpen();
    cursorStatus.textContent = "cursor: connected";
    cursorStatus.className = "ok";
  };
  ws.onclose = () => {
    mirror.onClose();
    cursorStatus.textContent = "cursor: disconnected (frozen)";
    cursorStatus.className = "bad";
    setTimeout(connectCursor, 1000);
  };
  ws.onerror = () => ws.close();
  ws.onmessage = (ev) => mirror.applyRaw(String(ev.data), performance.now());
}

// ---- target task ---------------------------------------------------------------

const task = new TargetTask({
  trials: 10,
  width: taskCanvas.width,
  height: taskCanvas.height,
  minRadius: 18,
  maxRadius: 46,
  seed: 7,
});

$("btn-task").addEventListener("click", () => {
  task.start(performance.now());
});
$("btn-export").addEventListener("click", () => {
  const blob = new Blob([task.exportJson()], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "task_records.json";
  a.click();
  URL.revokeObjectURL(a.href);
});

// clicks arrive from the server via the mirror; map screen pixels onto the panel
mirror.onClick((x, y, atMs) => {
  const tx = (x / (screenW - 1)) * taskCanvas.width;
  const ty = (y / (screenH - 1)) * taskCanvas.height;
  task.click(tx, ty, atMs);
});

// ---- rendering -------------------------------------------------------------------

function drawHandPanel() {
  const ctx = handCanvas.getContext("2d")!;
  const { width: w, height: h } = handCanvas;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#445";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  const tip = hand.fingertip(performance.now());
  const fx = ((tip.x - BOX_MIN.x) / (BOX_MAX.x - BOX_MIN.x)) * w;
  const fy = (1 - (tip.y - BOX_MIN.y) / (BOX_MAX.y - BOX_MIN.y)) * h;
  const depth = (tip.z - BOX_MIN.z) / (BOX_MAX.z - BOX_MIN.z);
  ctx.fillStyle = hand.assist.kind === "none" ? "#6cf" : "#fc6";
  ctx.beginPath();
  ctx.arc(fx, fy, 5 + 6 * (1 - depth), 0, 2 * Math.PI);
  ctx.fill();
}

function drawMirrorPanel() {
  const ctx = mirrorCanvas.getContext("2d")!;
  const { width: w, height: h } = mirrorCanvas;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#445";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  const mx = (mirror.x / (screenW - 1)) * w;
  const my = (mirror.y / (screenH - 1)) * h;
  ctx.fillStyle = mirror.connected ? (mirror.held ? "#f66" : "#6f6") : "#888";
  ctx.beginPath();
  ctx.arc(mx, my, mirror.held ? 9 : 6, 0, 2 * Math.PI);
  ctx.fill();
  if (mirror.held) {
    ctx.strokeStyle = "#f66";
    ctx.beginPath();
    ctx.arc(mx, my, 13, 0, 2 * Math.PI);
    ctx.stroke();
  }
  scrollTicker.textContent = `scroll up ${mirror.scrollUp} / down ${mirror.scrollDown}`;
}

function drawTaskPanel() {
  const ctx = taskCanvas.getContext("2d")!;
  const { width: w, height: h } = taskCanvas;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#445";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  if (task.current) {
    ctx.fillStyle = "#3a6";
    ctx.beginPath();
    ctx.arc(task.current.x, task.current.y, task.current.radius, 0, 2 * Math.PI);
    ctx.fill();
  }
  const mx = (mirror.x / (screenW - 1)) * w;
  const my = (mirror.y / (screenH - 1)) * h;
  ctx.strokeStyle = "#fff";
  ctx.beginPath();
  ctx.moveTo(mx - 6, my);
  ctx.lineTo(mx + 6, my);
  ctx.moveTo(mx, my - 6);
  ctx.lineTo(mx, my + 6);
  ctx.stroke();
  $("task-status").textContent = `trials: ${task.records.length} recorded` + (task.done ? " (done)" : "");
}

function renderLoop() {
  drawHandPanel();
  drawMirrorPanel();
  drawTaskPanel();
  requestAnimationFrame(renderLoop);
}

renderFingerBar();
connectFeed();
connectCursor();
renderLoop();
