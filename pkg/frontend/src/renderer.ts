/**
 * Scene rendering: everything the operator sees comes straight out of the
 * view model's latest state frame. Blind mode draws only the hand cursor —
 * the server already withheld the rest, so there is nothing to leak.
 */

import type { Draw } from "./draw.js";
import type { StateFrame } from "./protocol.js";
import type { ViewModel } from "./viewmodel.js";
import { Workspace } from "./workspace.js";

export interface Viewport {
  width: number;
  height: number;
  workspace: Workspace;
}

const COLORS = {
  background: "#101418",
  grid: "#1d242c",
  obstacle: "#d64541",
  influence: "#d6a441",
  drone: "#4aa3df",
  goal: "#9ad0f5",
  link: "#33505f",
  centroidTrail: "#e8e8e8",
  droneTrail: "#2c4a5e",
  hand: "#f5d76e",
  text: "#c9d2da",
};

export function renderScene(draw: Draw, vm: ViewModel, viewport: Viewport): void {
  const { width, height, workspace } = viewport;
  draw.clear(width, height, COLORS.background);

  const frame = vm.latest;
  if (!frame) {
    draw.text("waiting for state…", 12, 20, { fill: COLORS.text });
    return;
  }

  if (frame.mode === "blind") {
    renderHand(draw, frame, workspace);
    draw.text("blind mode — steer by touch", 12, 20, { fill: COLORS.text });
    return;
  }

  renderGrid(draw, viewport);

  // obstacles: solid safety disc plus the dashed influence ring
  for (const obstacle of frame.obstacles ?? []) {
    const [px, py] = workspace.toPixels(obstacle.x, obstacle.y);
    const safety = obstacle.radius / workspace.scale;
    const reach = (obstacle.radius + obstacle.influence) / workspace.scale;
    draw.circle(px, py, reach, {
      stroke: COLORS.influence,
      width: 1,
      dash: [4, 4],
      alpha: 0.7,
    });
    draw.circle(px, py, safety, { fill: COLORS.obstacle, alpha: 0.85 });
  }

  // formation overlay: every interlink as a line (hand links dashed)
  const drones = frame.drones ?? [];
  const at = (end: number | "hand"): [number, number] | null => {
    if (end === "hand") return workspace.toPixels(frame.hand[0], frame.hand[1]);
    const drone = drones.find((d) => d.id === end);
    return drone ? workspace.toPixels(drone.x, drone.y) : null;
  };
  for (const [source, target] of frame.links ?? []) {
    const a = at(source);
    const b = at(target);
    if (!a || !b) continue;
    const dashed = source === "hand" || target === "hand";
    draw.line([a, b], {
      stroke: COLORS.link,
      width: 1,
      dash: dashed ? [3, 3] : undefined,
    });
  }

  // trails: faint per-drone, solid centroid
  for (const trail of vm.droneTrails.values()) {
    if (trail.length >= 2) {
      draw.line(trail.map(([x, y]) => workspace.toPixels(x, y)), {
        stroke: COLORS.droneTrail,
        width: 1,
        alpha: 0.6,
      });
    }
  }
  if (vm.centroidTrail.length >= 2) {
    draw.line(vm.centroidTrail.map(([x, y]) => workspace.toPixels(x, y)), {
      stroke: COLORS.centroidTrail,
      width: 1.5,
    });
  }

  // goals as crosses, drones as filled circles with their id
  for (const drone of drones) {
    const [gx, gy] = workspace.toPixels(drone.gx, drone.gy);
    draw.line([[gx - 4, gy], [gx + 4, gy]], { stroke: COLORS.goal, width: 1 });
    draw.line([[gx, gy - 4], [gx, gy + 4]], { stroke: COLORS.goal, width: 1 });
  }
  for (const drone of drones) {
    const [px, py] = workspace.toPixels(drone.x, drone.y);
    draw.circle(px, py, 6, { fill: COLORS.drone });
    draw.text(String(drone.id), px, py - 9, {
      fill: COLORS.text,
      align: "center",
      font: "10px sans-serif",
    });
  }

  renderHand(draw, frame, workspace);

  const label = frame.formation_label ?? "?";
  draw.text(`formation: ${label}`, 12, 20, { fill: COLORS.text });
  if (frame.active_pattern) {
    draw.text(`pattern: ${frame.active_pattern}`, 12, 36, { fill: COLORS.hand });
  }
}

function renderHand(draw: Draw, frame: StateFrame, workspace: Workspace): void {
  const [px, py] = workspace.toPixels(frame.hand[0], frame.hand[1]);
  draw.circle(px, py, 8, { stroke: COLORS.hand, width: 2 });
  draw.line([[px - 12, py], [px + 12, py]], { stroke: COLORS.hand, width: 1 });
  draw.line([[px, py - 12], [px, py + 12]], { stroke: COLORS.hand, width: 1 });
}

function renderGrid(draw: Draw, viewport: Viewport): void {
  const { width, height, workspace } = viewport;
  const span = workspace.worldSpan / 2;
  for (let m = -Math.floor(span); m <= Math.floor(span); m++) {
    const [vx] = workspace.toPixels(m, 0);
    draw.line([[vx, 0], [vx, height]], { stroke: COLORS.grid, width: 1 });
    const [, hy] = workspace.toPixels(0, m);
    draw.line([[0, hy], [width, hy]], { stroke: COLORS.grid, width: 1 });
  }
}
