/**
 * Browser wiring: one canvas for the scene, one for the finger panel,
 * control buttons, and the disconnect banner. All state lives in the
 * ViewModel; this file only plugs DOM events into the moving parts.
 */

import { canvasDraw } from "./draw.js";
import { HandInputLoop } from "./hand_input.js";
import { mirrorVibration } from "./pattern_panel.js";
import { renderPattern } from "./pattern_panel.js";
import { renderScene } from "./renderer.js";
import { SessionClient } from "./client.js";
import { ViewModel } from "./viewmodel.js";
import { Workspace } from "./workspace.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function startConsole(): void {
  const scene = byId<HTMLCanvasElement>("scene");
  const panel = byId<HTMLCanvasElement>("panel");
  const banner = byId<HTMLDivElement>("banner");
  const status = byId<HTMLSpanElement>("status");
  const sceneCtx = scene.getContext("2d");
  const panelCtx = panel.getContext("2d");
  if (!sceneCtx || !panelCtx) throw new Error("canvas 2d context unavailable");

  const vm = new ViewModel();
  const workspace = new Workspace({
    left: 0,
    top: 0,
    width: scene.width,
    height: scene.height,
  });

  const url = new URLSearchParams(location.search).get("server") ?? "ws://127.0.0.1:8765";
  const client = new SessionClient(url, {
    onFrame: (frame) => {
      const kind = vm.ingest(frame, performance.now());
      if (kind === "pattern" && vm.playback) {
        mirrorVibration(vm.playback.timeline, navigator.vibrate?.bind(navigator));
      }
    },
    onOpen: () => {
      vm.status = "connected";
      input.resume();
    },
    onClose: () => {
      vm.status = "disconnected";
      input.suspend();
    },
  });

  const input = new HandInputLoop(workspace, {
    send: (frame) => client.sendFrame(frame),
    onSuspended: (suspended) => {
      banner.hidden = !suspended;
    },
  });

  scene.addEventListener("pointermove", (event) => {
    const bounds = scene.getBoundingClientRect();
    input.onPointer(event.clientX - bounds.left, event.clientY - bounds.top);
  });
  window.addEventListener("keydown", (event) => {
    if (input.onKey(event.key)) event.preventDefault();
  });

  byId<HTMLButtonElement>("start").addEventListener("click", () => client.control("start"));
  byId<HTMLButtonElement>("pause").addEventListener("click", () => client.control("pause"));
  byId<HTMLButtonElement>("reset").addEventListener("click", () => {
    client.control("reset");
    vm.clearHistory();
  });
  byId<HTMLSelectElement>("mode").addEventListener("change", (event) => {
    const mode = (event.target as HTMLSelectElement).value;
    if (mode === "visual" || mode === "blind") client.setMode(mode);
  });
  byId<HTMLSelectElement>("scenario").addEventListener("change", (event) => {
    client.loadScenario((event.target as HTMLSelectElement).value);
    vm.clearHistory();
  });

  const sceneDraw = canvasDraw(sceneCtx);
  const panelDraw = canvasDraw(panelCtx);
  const paint = () => {
    renderScene(sceneDraw, vm, {
      width: scene.width,
      height: scene.height,
      workspace,
    });
    renderPattern(panelDraw, vm.playback, performance.now(), {
      width: panel.width,
      height: panel.height,
    });
    const hb = vm.heartbeat;
    status.textContent =
      `${vm.status} | t=${vm.latest?.t_sim.toFixed(2) ?? "—"} s` +
      (hb ? ` | ${hb.running ? "running" : "paused"}` : "") +
      (vm.lastError ? ` | error: ${vm.lastError.code}` : "");
    requestAnimationFrame(paint);
  };

  client.connect();
  input.start();
  requestAnimationFrame(paint);
}

startConsole();
