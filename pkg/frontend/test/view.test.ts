import { describe, expect, it } from "vitest";

import {
  DUMMY_COLOR,
  buildTaskView,
  categoryColor,
  displayColor,
  highlightedRegions,
  quartileFilter,
  toggleFnHighlighter,
} from "../src/view";
import { makePrediction, makeTask } from "./helpers";

const ALL = new Set([1, 2, 3, 4] as const);

describe("buildTaskView", () => {
  it("keeps one overlay object per payload prediction", () => {
    const task = makeTask([0, 1, 2, 3, 4].map((i) => makePrediction(i)));
    expect(buildTaskView(task).objects).toHaveLength(task.predictions.length);
  });

  it("assigns deterministic category colors from argmax", () => {
    const task = makeTask([
      makePrediction(0, { probs: [0.9, 0.1] }),
      makePrediction(1, { probs: [0.1, 0.9] }),
      makePrediction(2, { probs: [0.8, 0.2] }),
    ]);
    const view = buildTaskView(task);
    expect(view.objects[0].color).toBe(categoryColor(0));
    expect(view.objects[1].color).toBe(categoryColor(1));
    expect(view.objects[2].color).toBe(view.objects[0].color);
  });
});

describe("quartileFilter", () => {
  it("Q4 on 8 distinct scores shows the top 2", () => {
    const scores = [0.1, 0.8, 0.3, 0.95, 0.2, 0.5, 0.4, 0.6];
    const task = makeTask(scores.map((s, i) => makePrediction(i, { score: s })));
    const view = buildTaskView(task);
    const visible = quartileFilter(view, new Set([4] as const));
    expect(visible.map((o) => o.score).sort()).toEqual([0.8, 0.95]);
  });

  it("all quartiles shows everything", () => {
    const task = makeTask([0, 1, 2, 3].map((i) => makePrediction(i, { score: i / 4 })));
    const view = buildTaskView(task);
    expect(quartileFilter(view, ALL)).toHaveLength(4);
  });

  it("empty task gives an empty view", () => {
    const view = buildTaskView(makeTask([]));
    expect(quartileFilter(view, ALL)).toEqual([]);
  });

  it("quartiles partition the objects", () => {
    const task = makeTask(
      Array.from({ length: 11 }, (_, i) => makePrediction(i, { score: Math.sin(i) }))
    );
    const view = buildTaskView(task);
    const total = [1, 2, 3, 4]
      .map((q) => quartileFilter(view, new Set([q] as const)).length)
      .reduce((a, b) => a + b, 0);
    expect(total).toBe(11);
  });
});

describe("toggleFnHighlighter", () => {
  it("full-coverage page highlights nothing", () => {
    const view = toggleFnHighlighter(
      buildTaskView(makeTask([makePrediction(0)], { uncovered_regions: [] }))
    );
    expect(highlightedRegions(view)).toEqual([]);
  });

  it("empty-prediction page highlights the whole page", () => {
    const task = makeTask([], { uncovered_regions: [[0, 0, 800, 1000]] });
    const view = toggleFnHighlighter(buildTaskView(task));
    expect(highlightedRegions(view)).toEqual([[0, 0, 800, 1000]]);
  });

  it("converts predictions to the dummy color while on", () => {
    const view = buildTaskView(makeTask([makePrediction(0)]));
    const on = toggleFnHighlighter(view);
    expect(displayColor(on, on.objects[0])).toBe(DUMMY_COLOR);
  });

  it("toggling twice restores category colors and hides highlights", () => {
    const task = makeTask([makePrediction(0)], {
      uncovered_regions: [[0, 500, 800, 500]],
    });
    const view = buildTaskView(task);
    const twice = toggleFnHighlighter(toggleFnHighlighter(view));
    expect(displayColor(twice, twice.objects[0])).toBe(twice.objects[0].color);
    expect(highlightedRegions(twice)).toEqual([]);
  });
});
