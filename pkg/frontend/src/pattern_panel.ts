/**
 * The finger panel: five circles, dorsal view of a right hand, thumb
 * (finger 1) leftmost through pinky (finger 5) rightmost. Brightness
 * follows the timeline's frequency levels on the wall clock, so the
 * animation lasts exactly as long as the pattern (to within however
 * often the app repaints — one display frame).
 */

import type { Draw } from "./draw.js";
import type { PatternTimeline } from "./protocol.js";
import type { PatternPlayback } from "./viewmodel.js";

export const FINGER_COUNT = 5;

/** Frequency level -> circle brightness (alpha on the accent color). */
const BRIGHTNESS: Record<number, number> = { 150: 0.45, 200: 0.7, 250: 1.0 };
const DIM_ALPHA = 0.12;
const ACCENT = "#f5d76e";
const SOCKET = "#39434d";

export type Levels = [number, number, number, number, number];

export const SILENT: Levels = [0, 0, 0, 0, 0];

/** Timeline levels at a wall-clock offset; silent outside the timeline. */
export function levelsAt(timeline: PatternTimeline, elapsedMs: number): Levels {
  if (elapsedMs < 0) return SILENT;
  let edge = 0;
  for (const frame of timeline.frames) {
    edge += frame.duration_ms;
    if (elapsedMs < edge) return frame.levels;
  }
  return SILENT;
}

export function isDone(playback: PatternPlayback, now: number): boolean {
  return now - playback.startedAt >= playback.timeline.total_duration_ms;
}

export interface PanelViewport {
  width: number;
  height: number;
}

export function renderPattern(
  draw: Draw,
  playback: PatternPlayback | null,
  now: number,
  viewport: PanelViewport,
): Levels {
  const levels: Levels =
    playback && !isDone(playback, now)
      ? levelsAt(playback.timeline, now - playback.startedAt)
      : SILENT;

  draw.clear(viewport.width, viewport.height, "#101418");
  const pitch = viewport.width / (FINGER_COUNT + 1);
  const radius = Math.min(pitch * 0.38, viewport.height * 0.3);
  const cy = viewport.height / 2;
  for (let finger = 0; finger < FINGER_COUNT; finger++) {
    const cx = pitch * (finger + 1);
    const level = levels[finger] ?? 0;
    const alpha = BRIGHTNESS[level] ?? DIM_ALPHA;
    draw.circle(cx, cy, radius, { stroke: SOCKET, width: 2 });
    draw.circle(cx, cy, radius - 2, { fill: ACCENT, alpha });
    if (level > 0) {
      draw.text(`${level} Hz`, cx, cy + radius + 14, {
        fill: "#c9d2da",
        align: "center",
        font: "10px sans-serif",
      });
    }
  }
  if (playback && !isDone(playback, now)) {
    draw.text(playback.timeline.id, 8, 14, { fill: "#c9d2da" });
  }
  return levels;
}

/**
 * Best-effort, non-normative vibration mirror: collapses the five-finger
 * timeline to one channel of alternating vibrate/pause durations (the
 * Vibration API convention). Devices without the API simply skip it.
 */
export function vibrationPattern(timeline: PatternTimeline): number[] {
  const out: number[] = [];
  for (const frame of timeline.frames) {
    const active = frame.levels.some((level) => level > 0);
    const slotIsVibrate = out.length % 2 === 0;
    if (active === slotIsVibrate) {
      out.push(frame.duration_ms);
    } else if (out.length === 0) {
      out.push(0, frame.duration_ms); // leading pause
    } else {
      out[out.length - 1] = (out[out.length - 1] ?? 0) + frame.duration_ms;
    }
  }
  return out;
}

export function mirrorVibration(
  timeline: PatternTimeline,
  vibrate?: (pattern: number[]) => boolean,
): void {
  try {
    vibrate?.(vibrationPattern(timeline));
  } catch {
    // explicitly best-effort: vibration must never break the console
  }
}
