/**
 * Golden tests for the scene renderer. "Image" here is the recorded
 * draw-op stream — the full rendering contract — rather than rasterized
 * pixels, which would drag in a native canvas. Regenerate the goldens
 * after an intentional visual change with:
 *
 *     UPDATE_GOLDEN=1 npx vitest run tests/renderer.test.ts
 */

import { existsSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { RecordingDraw } from "../src/draw.js";
import type { StateFrame } from "../src/protocol.js";
import { renderScene } from "../src/renderer.js";
import { ViewModel } from "../src/viewmodel.js";
import { Workspace } from "../src/workspace.js";

const FIXTURES = join(__dirname, "fixtures");
const GOLDEN = join(__dirname, "golden");

const viewport = {
  width: 720,
  height: 720,
  workspace: new Workspace({ left: 0, top: 0, width: 720, height: 720 }),
};

function checkGolden(name: string, ops: unknown[]): void {
  const path = join(GOLDEN, name);
  const rendered = JSON.stringify(ops, null, 1) + "\n";
  if (process.env.UPDATE_GOLDEN === "1" || !existsSync(path)) {
    writeFileSync(path, rendered);
  }
  expect(rendered).toBe(readFileSync(path, "utf8"));
}

function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf8"));
}

describe("scene renderer goldens", () => {
  it("empty scene: nothing but the waiting notice", () => {
    const draw = new RecordingDraw();
    renderScene(draw, new ViewModel(), viewport);
    checkGolden("scene_empty.json", draw.ops);
  });

  it("rhombus preset: drones, goals, links, trails over the meter grid", () => {
    const vm = new ViewModel();
    for (const frame of loadFixture<StateFrame[]>("rhombus_state.json")) {
      vm.ingest(frame, 0);
    }
    const draw = new RecordingDraw();
    renderScene(draw, vm, viewport);
    checkGolden("scene_rhombus.json", draw.ops);
  });

  it("blind mode: hand cursor and caption only", () => {
    const vm = new ViewModel();
    vm.ingest(loadFixture<StateFrame>("blind_state.json"), 0);
    const draw = new RecordingDraw();
    renderScene(draw, vm, viewport);
    checkGolden("scene_blind.json", draw.ops);
    // schema-level: no drone/obstacle/centroid ops can exist at all
    const kinds = new Set(draw.ops.map((op) => (op as { op: string }).op));
    expect(kinds).toEqual(new Set(["clear", "circle", "line", "text"]));
    expect(draw.ops.filter((op) => (op as { op: string }).op === "circle").length).toBe(1);
  });
});

describe("dumb-terminal property", () => {
  it("rendering mutates nothing it was given", () => {
    const vm = new ViewModel();
    for (const frame of loadFixture<StateFrame[]>("rhombus_state.json")) {
      vm.ingest(frame, 0);
    }
    const before = JSON.stringify({
      latest: vm.latest,
      centroid: vm.centroidTrail,
      drones: [...vm.droneTrails.entries()],
    });
    renderScene(new RecordingDraw(), vm, viewport);
    renderScene(new RecordingDraw(), vm, viewport); // idempotent re-render
    const after = JSON.stringify({
      latest: vm.latest,
      centroid: vm.centroidTrail,
      drones: [...vm.droneTrails.entries()],
    });
    expect(after).toBe(before);
  });

  it("two renders of the same model emit identical ops", () => {
    const vm = new ViewModel();
    vm.ingest(loadFixture<StateFrame[]>("rhombus_state.json")[0]!, 0);
    const a = new RecordingDraw();
    const b = new RecordingDraw();
    renderScene(a, vm, viewport);
    renderScene(b, vm, viewport);
    expect(JSON.stringify(a.ops)).toBe(JSON.stringify(b.ops));
  });
});
