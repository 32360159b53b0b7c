/**
 * The calibrated workspace rectangle: a linear map between pointer pixels
 * and world meters. The rectangle's center is world (0, 0); its full
 * width spans `worldSpan` meters (5 m by default, matching the flight
 * space). Screen y grows downward, world y grows upward.
 */

export interface Rect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export const DEFAULT_WORLD_SPAN = 5.0;

export class Workspace {
  constructor(
    public rect: Rect,
    public worldSpan: number = DEFAULT_WORLD_SPAN,
  ) {
    if (rect.width <= 0 || rect.height <= 0) {
      throw new Error("workspace rectangle must have positive size");
    }
    if (worldSpan <= 0) {
      throw new Error("world span must be positive");
    }
  }

  /** Meters per pixel; one scale for both axes so the map is isotropic. */
  get scale(): number {
    return this.worldSpan / this.rect.width;
  }

  toWorld(px: number, py: number): [number, number] {
    const cx = this.rect.left + this.rect.width / 2;
    const cy = this.rect.top + this.rect.height / 2;
    return [(px - cx) * this.scale, (cy - py) * this.scale];
  }

  toPixels(wx: number, wy: number): [number, number] {
    const cx = this.rect.left + this.rect.width / 2;
    const cy = this.rect.top + this.rect.height / 2;
    return [cx + wx / this.scale, cy - wy / this.scale];
  }
}
