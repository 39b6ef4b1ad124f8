// Canvas rendering of a task view: prediction overlays, selection
// emphasis, and the false-negative highlighter.

import { Box } from "./types";
import {
  HIGHLIGHT_COLOR,
  OverlayObject,
  Quartile,
  TaskView,
  displayColor,
  highlightedRegions,
  quartileFilter,
} from "./view";

export type RenderOptions = {
  visibleQuartiles: ReadonlySet<Quartile>;
  activeIndex?: number;
};

const ALL_QUARTILES: ReadonlySet<Quartile> = new Set([1, 2, 3, 4]);

export function renderTask(
  ctx: CanvasRenderingContext2D,
  view: TaskView,
  opts: RenderOptions = { visibleQuartiles: ALL_QUARTILES }
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);

  for (const region of highlightedRegions(view)) {
    fillBox(ctx, region, HIGHLIGHT_COLOR);
  }

  for (const obj of quartileFilter(view, opts.visibleQuartiles)) {
    drawObject(ctx, view, obj, obj.index === opts.activeIndex);
  }

  drawBudget(ctx, view);
}

function drawObject(
  ctx: CanvasRenderingContext2D,
  view: TaskView,
  obj: OverlayObject,
  active: boolean
): void {
  const [x, y, w, h] = obj.bbox;
  ctx.lineWidth = obj.selected ? 3 : 1;
  ctx.strokeStyle = displayColor(view, obj);
  ctx.setLineDash(obj.selected ? [] : [4, 3]);
  ctx.strokeRect(x, y, w, h);
  ctx.setLineDash([]);

  if (active) {
    ctx.strokeStyle = "#000";
    ctx.lineWidth = 1;
    ctx.strokeRect(x - 2, y - 2, w + 4, h + 4);
  }

  if (obj.selected && obj.score !== null) {
    const label = obj.score.toFixed(3);
    ctx.font = "12px sans-serif";
    const tw = ctx.measureText(label).width + 6;
    ctx.fillStyle = "rgba(0,0,0,0.6)";
    ctx.fillRect(x, Math.max(0, y - 15), tw, 15);
    ctx.fillStyle = "#fff";
    ctx.fillText(label, x + 3, Math.max(11, y - 4));
  }
}

function fillBox(ctx: CanvasRenderingContext2D, box: Box, color: string): void {
  const [x, y, w, h] = box;
  ctx.fillStyle = color;
  ctx.fillRect(x, y, w, h);
}

function drawBudget(ctx: CanvasRenderingContext2D, view: TaskView): void {
  const label = `budget ${view.remainingBudget.toFixed(1)}`;
  ctx.font = "13px sans-serif";
  ctx.fillStyle = "rgba(0,0,0,0.7)";
  ctx.fillRect(4, 4, ctx.measureText(label).width + 8, 18);
  ctx.fillStyle = "#fff";
  ctx.fillText(label, 8, 17);
}

export function hitTest(view: TaskView, px: number, py: number): number | null {
  // topmost (last drawn) first
  for (let i = view.objects.length - 1; i >= 0; i--) {
    const [x, y, w, h] = view.objects[i].bbox;
    if (px >= x && px <= x + w && py >= y && py <= y + h) {
      return view.objects[i].index;
    }
  }
  return null;
}
