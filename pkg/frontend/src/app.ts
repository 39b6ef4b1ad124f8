// Minimal browser wiring: fetch a task, render it to a canvas, let the
// annotator confirm/edit/add, and submit. Everything stateful lives in
// TaskView + EditState; this file only binds DOM events.

import { AnnotatorClient } from "./api";
import {
  Handle,
  addAnnotation,
  buildSubmitPayload,
  canSubmit,
  chargePreview,
  confirmPrediction,
  dragBox,
  editPrediction,
  emptyEditState,
} from "./editing";
import { hitTest, renderTask } from "./canvas";
import { Box, isRoundComplete } from "./types";
import { Quartile, TaskView, buildTaskView, toggleFnHighlighter } from "./view";

export type AppElements = {
  canvas: HTMLCanvasElement;
  submitButton: HTMLButtonElement;
  chargeLabel: HTMLElement;
  fnToggle: HTMLButtonElement;
  quartileBoxes: Record<Quartile, HTMLInputElement>;
  statusLabel: HTMLElement;
};

export class AnnotatorApp {
  private view: TaskView | null = null;
  private taskId: string | null = null;
  private state = emptyEditState();
  private activeIndex: number | null = null;

  constructor(
    private readonly client: AnnotatorClient,
    private readonly sessionId: string,
    private readonly els: AppElements
  ) {
    els.fnToggle.addEventListener("click", () => {
      if (this.view) {
        this.view = toggleFnHighlighter(this.view);
        this.redraw();
      }
    });
    for (const box of Object.values(els.quartileBoxes)) {
      box.addEventListener("change", () => this.redraw());
    }
    els.canvas.addEventListener("click", (ev) => this.onClick(ev));
    els.submitButton.addEventListener("click", () => void this.submit());
  }

  async loadNextTask(): Promise<void> {
    const task = await this.client.nextTask(this.sessionId);
    if (isRoundComplete(task)) {
      this.view = null;
      this.taskId = null;
      this.els.statusLabel.textContent = `round ${task.round} complete`;
      return;
    }
    this.view = buildTaskView(task);
    this.taskId = task.task_id;
    this.state = emptyEditState();
    this.activeIndex = null;
    this.redraw();
  }

  confirmActive(): void {
    if (this.view !== null && this.activeIndex !== null) {
      confirmPrediction(this.state, this.activeIndex);
      this.redraw();
    }
  }

  dragActive(handle: Handle, dx: number, dy: number): void {
    if (this.view === null || this.activeIndex === null) return;
    const obj = this.view.objects.find((o) => o.index === this.activeIndex);
    if (!obj) return;
    const decided = this.state.decisions.get(obj.index);
    const current: Box = decided?.kind === "edit" ? decided.bbox : obj.bbox;
    editPrediction(this.state, obj.index, dragBox(current, handle, dx, dy), obj.category);
    this.redraw();
  }

  addBox(bbox: Box, category: number): void {
    addAnnotation(this.state, bbox, category);
    this.redraw();
  }

  private visibleQuartiles(): Set<Quartile> {
    const out = new Set<Quartile>();
    for (const q of [1, 2, 3, 4] as const) {
      if (this.els.quartileBoxes[q].checked) out.add(q);
    }
    return out;
  }

  private onClick(ev: MouseEvent): void {
    if (!this.view) return;
    const rect = this.els.canvas.getBoundingClientRect();
    this.activeIndex = hitTest(
      this.view, ev.clientX - rect.left, ev.clientY - rect.top);
    this.redraw();
  }

  private redraw(): void {
    if (!this.view) return;
    const ctx = this.els.canvas.getContext("2d");
    if (ctx) {
      renderTask(ctx, this.view, {
        visibleQuartiles: this.visibleQuartiles(),
        activeIndex: this.activeIndex ?? undefined,
      });
    }
    const preview = chargePreview(this.view, this.state);
    this.els.chargeLabel.textContent =
      `charge ${preview.toFixed(1)} / remaining ${this.view.remainingBudget.toFixed(1)}`;
    this.els.submitButton.disabled = !canSubmit(this.view, this.state);
  }

  private async submit(): Promise<void> {
    if (!this.view || !this.taskId) return;
    try {
      const summary = await this.client.submitLabels(
        this.taskId, buildSubmitPayload(this.view, this.state));
      this.els.statusLabel.textContent =
        `labeled ${summary.objects_labeled} objects, charged ${summary.charge.toFixed(1)}`;
      await this.loadNextTask();
    } catch (err) {
      this.els.statusLabel.textContent = String(err);
    }
  }
}
