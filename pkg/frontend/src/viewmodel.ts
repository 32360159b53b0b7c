/**
 * The console's entire knowledge of the world: the latest server frames,
 * nothing more. No client-side physics, no extrapolation — if the server
 * did not say it, the view model does not know it.
 */

import type {
  ErrorFrame,
  HeartbeatFrame,
  PatternTimeline,
  ServerFrame,
  StateFrame,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface PatternPlayback {
  timeline: PatternTimeline;
  /** Wall-clock ms when the pattern frame arrived; drives the animation. */
  startedAt: number;
}

const TRAIL_LIMIT = 600; // points kept per trail (~20 s at 30 Hz frames)

export class ViewModel {
  status: ConnectionStatus = "connecting";
  latest: StateFrame | null = null;
  heartbeat: HeartbeatFrame | null = null;
  lastError: ErrorFrame | null = null;
  metrics: Record<string, unknown> | null = null;
  playback: PatternPlayback | null = null;

  /** Solid centroid trail; one point per state frame that carried one. */
  centroidTrail: [number, number][] = [];
  /** Faint per-drone trails, keyed by drone id. */
  droneTrails = new Map<number, [number, number][]>();

  get mode(): "visual" | "blind" {
    return this.latest?.mode ?? "visual";
  }

  /** Feed one parsed server frame; returns the frame kind it handled. */
  ingest(frame: ServerFrame, now: number): ServerFrame["type"] {
    switch (frame.type) {
      case "state":
        this.latest = frame; // latest-frame slot: render decoupled from ingest
        if (frame.centroid) {
          pushCapped(this.centroidTrail, frame.centroid);
        }
        for (const drone of frame.drones ?? []) {
          let trail = this.droneTrails.get(drone.id);
          if (!trail) {
            trail = [];
            this.droneTrails.set(drone.id, trail);
          }
          pushCapped(trail, [drone.x, drone.y]);
        }
        break;
      case "pattern":
        this.playback = { timeline: frame.timeline, startedAt: now };
        break;
      case "metrics_summary":
        this.metrics = frame.metrics;
        break;
      case "heartbeat":
        this.heartbeat = frame;
        break;
      case "error":
        this.lastError = frame;
        break;
    }
    return frame.type;
  }

  /** Forget trails and playback, e.g. after a reset or scenario load. */
  clearHistory(): void {
    this.centroidTrail = [];
    this.droneTrails.clear();
    this.playback = null;
    this.metrics = null;
  }
}

function pushCapped(trail: [number, number][], point: [number, number]): void {
  trail.push(point);
  if (trail.length > TRAIL_LIMIT) {
    trail.splice(0, trail.length - TRAIL_LIMIT);
  }
}
