/**
 * The hand input loop: pointer (or nudge-key) positions become a steady
 * hand_pose stream. While the hand moves, poses go out at the pump rate
 * (60 Hz, comfortably above the 30 Hz floor); while it rests, a keepalive
 * goes out at 5 Hz so the server always has a fresh-enough sample. When
 * the connection drops the loop suspends itself and raises the banner.
 */

import type { HandPoseFrame } from "./protocol.js";
import { Workspace } from "./workspace.js";

export const PUMP_INTERVAL_MS = 1000 / 60; // sending cadence while moving
// the pump quantizes send times to its own period, so the keepalive timer
// must undershoot 200 ms or the worst-case gap would dip below 5 Hz
export const KEEPALIVE_INTERVAL_MS = 200 - PUMP_INTERVAL_MS;
export const NUDGE_STEP_M = 0.1;

export interface HandInputOptions {
  send: (frame: HandPoseFrame) => void;
  /** Called with true when input suspends (disconnect), false on resume. */
  onSuspended?: (suspended: boolean) => void;
  now?: () => number; // wall clock in ms, injectable for tests
}

export class HandInputLoop {
  private hand: [number, number] = [0, 0];
  private moved = false;
  private lastSentAt = -Infinity;
  private suspended = true;
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly now: () => number;

  constructor(
    public workspace: Workspace,
    private readonly options: HandInputOptions,
  ) {
    this.now = options.now ?? (() => Date.now());
  }

  /** Current hand position in world meters (last pointer or nudge). */
  get position(): [number, number] {
    return [this.hand[0], this.hand[1]];
  }

  get isSuspended(): boolean {
    return this.suspended;
  }

  /** Connection came up: resume sending. */
  resume(): void {
    if (!this.suspended) return;
    this.suspended = false;
    this.moved = true; // announce the current pose right away
    this.options.onSuspended?.(false);
  }

  /** Connection dropped: suspend input and show the banner. */
  suspend(): void {
    if (this.suspended) return;
    this.suspended = true;
    this.options.onSuspended?.(true);
  }

  /** Pointer moved over the workspace (pixel coordinates). */
  onPointer(px: number, py: number): void {
    const [wx, wy] = this.workspace.toWorld(px, py);
    if (wx !== this.hand[0] || wy !== this.hand[1]) {
      this.hand = [wx, wy];
      this.moved = true;
    }
  }

  /** Keyboard accessibility: step the hand by a fixed world offset. */
  nudge(dx: number, dy: number): void {
    this.hand = [this.hand[0] + dx * NUDGE_STEP_M, this.hand[1] + dy * NUDGE_STEP_M];
    this.moved = true;
  }

  /** Map an arrow/WASD key to a nudge; returns true when handled. */
  onKey(key: string): boolean {
    switch (key) {
      case "ArrowUp":
      case "w":
        this.nudge(0, 1);
        return true;
      case "ArrowDown":
      case "s":
        this.nudge(0, -1);
        return true;
      case "ArrowLeft":
      case "a":
        this.nudge(-1, 0);
        return true;
      case "ArrowRight":
      case "d":
        this.nudge(1, 0);
        return true;
      default:
        return false;
    }
  }

  /** One pump step; the app calls this from a 60 Hz interval. */
  tick(now: number = this.now()): void {
    if (this.suspended) return;
    const due = this.moved || now - this.lastSentAt >= KEEPALIVE_INTERVAL_MS;
    if (!due) return;
    this.moved = false;
    this.lastSentAt = now;
    this.options.send({
      type: "hand_pose",
      t_client: now / 1000,
      x: this.hand[0],
      y: this.hand[1],
    });
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), PUMP_INTERVAL_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
