// Task view state: overlay objects, quartile filtering, and the
// false-negative highlighter toggle.

import { Box, PredictionPayload, TaskPayload } from "./types";

export type Quartile = 1 | 2 | 3 | 4;

export type OverlayObject = {
  index: number;
  bbox: Box;
  category: number;
  color: string;
  score: number | null;
  confidence: number | null;
  selected: boolean;
  quartile: Quartile;
};

export type TaskView = {
  image: { fileName: string | null; width: number; height: number };
  objects: OverlayObject[];
  quartileBoundaries: number[];
  uncoveredRegions: Box[];
  remainingBudget: number;
  eta: number;
  quota: number;
  fnHighlighter: boolean;
};

// Deterministic category colors; a single neutral tone when the
// false-negative highlighter converts all predictions.
const PALETTE = [
  "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
  "#46f0f0", "#f032e6", "#bcf60c", "#008080", "#9a6324",
];
export const DUMMY_COLOR = "#9e9e9e";
export const HIGHLIGHT_COLOR = "rgba(255, 235, 59, 0.45)";

export function categoryColor(category: number): string {
  return PALETTE[((category % PALETTE.length) + PALETTE.length) % PALETTE.length];
}

export function argmax(probs: number[]): number {
  let best = 0;
  for (let i = 1; i < probs.length; i++) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

// Quartile by score rank: the top 25% of scores is Q4.
function scoreQuartiles(predictions: PredictionPayload[]): Quartile[] {
  const n = predictions.length;
  const order = predictions
    .map((p, i) => ({ score: p.score ?? 0, i }))
    .sort((a, b) => a.score - b.score || a.i - b.i);
  const quartiles = new Array<Quartile>(n);
  order.forEach(({ i }, rank) => {
    quartiles[i] = (1 + Math.min(3, Math.floor((4 * rank) / n))) as Quartile;
  });
  return quartiles;
}

export function buildTaskView(task: TaskPayload): TaskView {
  const quartiles = scoreQuartiles(task.predictions);
  const objects = task.predictions.map((p, i) => ({
    index: p.index,
    bbox: p.bbox,
    category: argmax(p.probs),
    color: categoryColor(argmax(p.probs)),
    score: p.score,
    confidence: p.confidence,
    selected: p.selected,
    quartile: quartiles[i],
  }));
  return {
    image: {
      fileName: task.image.file_name,
      width: task.image.width,
      height: task.image.height,
    },
    objects,
    quartileBoundaries: task.quartiles,
    uncoveredRegions: task.uncovered_regions,
    remainingBudget: task.remaining_budget,
    eta: task.eta,
    quota: task.quota,
    fnHighlighter: false,
  };
}

export function quartileFilter(
  view: TaskView,
  selection: ReadonlySet<Quartile>
): OverlayObject[] {
  return view.objects.filter((o) => selection.has(o.quartile));
}

export function toggleFnHighlighter(view: TaskView): TaskView {
  return { ...view, fnHighlighter: !view.fnHighlighter };
}

// Regions to emphasize while the highlighter is on. An empty-prediction
// page is served with one full-page uncovered region by the backend, so
// the whole page lights up.
export function highlightedRegions(view: TaskView): Box[] {
  return view.fnHighlighter ? view.uncoveredRegions : [];
}

export function displayColor(view: TaskView, obj: OverlayObject): string {
  return view.fnHighlighter ? DUMMY_COLOR : obj.color;
}
