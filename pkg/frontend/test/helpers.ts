import { Box, PredictionPayload, TaskPayload } from "../src/types";

export function makePrediction(
  index: number,
  overrides: Partial<PredictionPayload> = {}
): PredictionPayload {
  return {
    index,
    bbox: [10 * index, 20, 40, 30],
    probs: [0.7, 0.2, 0.1],
    source: "model-auto",
    score: 0.5,
    confidence: 0.9,
    selected: false,
    ...overrides,
  };
}

export function makeTask(
  predictions: PredictionPayload[],
  overrides: Partial<TaskPayload> = {}
): TaskPayload {
  return {
    task_id: "t-1",
    page_id: 1,
    image: { file_name: "page-00001.png", width: 800, height: 1000 },
    quota: predictions.filter((p) => p.selected).length,
    ratio: 0.9,
    eta: 0.2,
    remaining_budget: 50,
    quartiles: [0.25, 0.5, 0.75],
    predictions,
    uncovered_regions: [],
    ...overrides,
  };
}

// Small deterministic PRNG for property-style tests.
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function boxInside(box: Box, width: number, height: number): boolean {
  const [x, y, w, h] = box;
  return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= width && y + h <= height;
}
