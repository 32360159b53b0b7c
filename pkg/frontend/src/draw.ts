/**
 * The renderer's tiny output language. Scene and panel renderers emit
 * these ops; the browser adapter replays them onto a real 2D canvas,
 * and the tests replay them into golden snapshots instead of pixels.
 */

export interface StrokeStyle {
  stroke?: string;
  width?: number;
  dash?: number[];
  alpha?: number;
}

export interface FillStyle {
  fill?: string;
  alpha?: number;
}

export type ShapeStyle = StrokeStyle & FillStyle;

export interface TextStyle {
  fill: string;
  font?: string;
  align?: "left" | "center" | "right";
  alpha?: number;
}

export interface Draw {
  clear(width: number, height: number, color: string): void;
  circle(x: number, y: number, radius: number, style: ShapeStyle): void;
  line(points: [number, number][], style: StrokeStyle): void;
  rect(x: number, y: number, w: number, h: number, style: ShapeStyle): void;
  text(s: string, x: number, y: number, style: TextStyle): void;
}

/** Records every op verbatim; the golden tests snapshot `ops`. */
export class RecordingDraw implements Draw {
  ops: unknown[] = [];

  clear(width: number, height: number, color: string): void {
    this.ops.push({ op: "clear", width, height, color });
  }

  circle(x: number, y: number, radius: number, style: ShapeStyle): void {
    this.ops.push({ op: "circle", x: r3(x), y: r3(y), radius: r3(radius), style });
  }

  line(points: [number, number][], style: StrokeStyle): void {
    this.ops.push({
      op: "line",
      points: points.map(([x, y]) => [r3(x), r3(y)]),
      style,
    });
  }

  rect(x: number, y: number, w: number, h: number, style: ShapeStyle): void {
    this.ops.push({ op: "rect", x: r3(x), y: r3(y), w: r3(w), h: r3(h), style });
  }

  text(s: string, x: number, y: number, style: TextStyle): void {
    this.ops.push({ op: "text", s, x: r3(x), y: r3(y), style });
  }
}

/** Round to 3 decimals (sub-millipixel) so goldens stay readable. */
function r3(v: number): number {
  return Math.round(v * 1000) / 1000;
}

/** Adapter: replay Draw ops onto a real canvas 2D context. */
export function canvasDraw(ctx: CanvasRenderingContext2D): Draw {
  const applyStroke = (style: StrokeStyle) => {
    ctx.strokeStyle = style.stroke ?? "#000";
    ctx.lineWidth = style.width ?? 1;
    ctx.setLineDash(style.dash ?? []);
    ctx.globalAlpha = style.alpha ?? 1;
  };
  return {
    clear(width, height, color) {
      ctx.globalAlpha = 1;
      ctx.fillStyle = color;
      ctx.fillRect(0, 0, width, height);
    },
    circle(x, y, radius, style) {
      ctx.beginPath();
      ctx.arc(x, y, radius, 0, 2 * Math.PI);
      if (style.fill) {
        ctx.globalAlpha = style.alpha ?? 1;
        ctx.fillStyle = style.fill;
        ctx.fill();
      }
      if (style.stroke) {
        applyStroke(style);
        ctx.stroke();
      }
      ctx.globalAlpha = 1;
    },
    line(points, style) {
      if (points.length < 2) return;
      ctx.beginPath();
      const [first, ...rest] = points as [[number, number], ...[number, number][]];
      ctx.moveTo(first[0], first[1]);
      for (const [x, y] of rest) ctx.lineTo(x, y);
      applyStroke(style);
      ctx.stroke();
      ctx.globalAlpha = 1;
      ctx.setLineDash([]);
    },
    rect(x, y, w, h, style) {
      if (style.fill) {
        ctx.globalAlpha = style.alpha ?? 1;
        ctx.fillStyle = style.fill;
        ctx.fillRect(x, y, w, h);
      }
      if (style.stroke) {
        applyStroke(style);
        ctx.strokeRect(x, y, w, h);
      }
      ctx.globalAlpha = 1;
    },
    text(s, x, y, style) {
      ctx.globalAlpha = style.alpha ?? 1;
      ctx.fillStyle = style.fill;
      ctx.font = style.font ?? "12px sans-serif";
      ctx.textAlign = style.align ?? "left";
      ctx.fillText(s, x, y);
      ctx.globalAlpha = 1;
    },
  };
}
