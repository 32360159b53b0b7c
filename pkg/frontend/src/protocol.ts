/**
 * Wire protocol of the session server, mirrored verbatim.
 *
 * The console is a dumb terminal: every quantity it shows arrives in one
 * of these frames, and everything it says is one of the client frames.
 */

// ---------------------------------------------------------------------------
// client -> server

export interface HandPoseFrame {
  type: "hand_pose";
  t_client: number;
  x: number;
  y: number;
}

export interface ControlFrame {
  type: "control";
  action: "start" | "pause" | "reset" | "set_mode" | "load_scenario";
  mode?: "visual" | "blind";
  name?: string;
}

export type ClientFrame = HandPoseFrame | ControlFrame;

// ---------------------------------------------------------------------------
// server -> client

export interface DroneDot {
  id: number;
  x: number;
  y: number;
  gx: number;
  gy: number;
}

export interface ObstacleDisc {
  id: string;
  x: number;
  y: number;
  radius: number;
  influence: number;
}

export interface EventNote {
  tick: number;
  kind: string;
  data: Record<string, unknown>;
}

/** One endpoint of a link row: drone index or the literal "hand". */
export type LinkEnd = number | "hand";

export interface StateFrame {
  type: "state";
  tick: number;
  t_sim: number;
  mode: "visual" | "blind";
  hand: [number, number];
  active_pattern: string | null;
  events: EventNote[];
  // visual mode only — the server withholds these in blind mode
  drones?: DroneDot[];
  centroid?: [number, number];
  formation_label?: string;
  obstacles?: ObstacleDisc[];
  links?: [LinkEnd, LinkEnd][];
}

export interface TimelineFrame {
  duration_ms: number;
  levels: [number, number, number, number, number];
}

export interface PatternTimeline {
  id: string;
  frames: TimelineFrame[];
  total_duration_ms: number;
}

export interface PatternFrame {
  type: "pattern";
  id: string;
  timeline: PatternTimeline;
}

export interface MetricsSummaryFrame {
  type: "metrics_summary";
  metrics: Record<string, unknown>;
}

export interface HeartbeatFrame {
  type: "heartbeat";
  t_sim: number;
  running: boolean;
  overruns: number;
  dropped_frames: number;
}

export interface ErrorFrame {
  type: "error";
  code: string;
  detail: string;
}

export type ServerFrame =
  | StateFrame
  | PatternFrame
  | MetricsSummaryFrame
  | HeartbeatFrame
  | ErrorFrame;

/** Keys a blind-mode state frame must never carry. */
export const VISUAL_ONLY_KEYS = [
  "drones",
  "centroid",
  "formation_label",
  "obstacles",
  "links",
] as const;

export function parseServerFrame(raw: string): ServerFrame | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const type = (doc as { type?: unknown }).type;
  if (
    type === "state" ||
    type === "pattern" ||
    type === "metrics_summary" ||
    type === "heartbeat" ||
    type === "error"
  ) {
    return doc as ServerFrame;
  }
  return null;
}

/** True when a state frame carries none of the visual-only keys. */
export function isSchemaBlind(frame: StateFrame): boolean {
  return VISUAL_ONLY_KEYS.every((key) => !(key in frame));
}
