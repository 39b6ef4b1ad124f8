// Box editing and submission: drag-resize geometry, clamping to image
// bounds, charge preview mirroring the server's pricing fields, and the
// submit gate.

import { AdditionPayload, Box, EditPayload, SubmitPayload } from "./types";
import { TaskView } from "./view";

export type Decision =
  | { kind: "confirm" }
  | { kind: "edit"; bbox: Box; category: number };

export type EditState = {
  // one decision per selected prediction index; unselected predictions
  // are not the annotator's job
  decisions: Map<number, Decision>;
  additions: AdditionPayload[];
};

export function emptyEditState(): EditState {
  return { decisions: new Map(), additions: [] };
}

const MIN_SIZE = 1;

// Keep a box inside [0,width]x[0,height]: translate back into frame,
// then crop whatever still overhangs.
export function clampBox(box: Box, width: number, height: number): Box {
  let [x, y, w, h] = box;
  w = Math.max(MIN_SIZE, Math.min(w, width));
  h = Math.max(MIN_SIZE, Math.min(h, height));
  x = Math.max(0, Math.min(x, width - w));
  y = Math.max(0, Math.min(y, height - h));
  return [x, y, w, h];
}

export type Handle =
  | "move"
  | "n" | "s" | "e" | "w"
  | "ne" | "nw" | "se" | "sw";

// Apply one drag step to a box. No grid snapping: layouts are
// boundary-sensitive, so edges land exactly where the pointer puts them.
export function dragBox(box: Box, handle: Handle, dx: number, dy: number): Box {
  let [x, y, w, h] = box;
  if (handle === "move") return [x + dx, y + dy, w, h];
  if (handle.includes("w")) { x += dx; w -= dx; }
  if (handle.includes("e")) { w += dx; }
  if (handle.includes("n")) { y += dy; h -= dy; }
  if (handle.includes("s")) { h += dy; }
  if (w < MIN_SIZE) { if (handle.includes("w")) x += w - MIN_SIZE; w = MIN_SIZE; }
  if (h < MIN_SIZE) { if (handle.includes("n")) y += h - MIN_SIZE; h = MIN_SIZE; }
  return [x, y, w, h];
}

export function confirmPrediction(state: EditState, index: number): void {
  state.decisions.set(index, { kind: "confirm" });
}

export function editPrediction(
  state: EditState,
  index: number,
  bbox: Box,
  category: number
): void {
  state.decisions.set(index, { kind: "edit", bbox, category });
}

export function addAnnotation(state: EditState, bbox: Box, category: number): void {
  state.additions.push({ bbox, category });
}

// Projected cost of the current state, using the eta the server sent with
// the task. Confirmations cost eta; edits and additions a full unit.
export function chargePreview(view: TaskView, state: EditState): number {
  let confirmations = 0;
  let edits = 0;
  for (const d of state.decisions.values()) {
    if (d.kind === "confirm") confirmations += 1;
    else edits += 1;
  }
  return confirmations * view.eta + edits + state.additions.length;
}

export function allSelectedDecided(view: TaskView, state: EditState): boolean {
  return view.objects
    .filter((o) => o.selected)
    .every((o) => state.decisions.has(o.index));
}

// The submit button is enabled only when every selected prediction has a
// decision and the projected charge fits the remaining budget.
export function canSubmit(view: TaskView, state: EditState): boolean {
  return (
    allSelectedDecided(view, state) &&
    chargePreview(view, state) <= view.remainingBudget
  );
}

// Final payload: all geometry is clamped to image bounds before send.
export function buildSubmitPayload(view: TaskView, state: EditState): SubmitPayload {
  const { width, height } = view.image;
  const confirmations: number[] = [];
  const edits: EditPayload[] = [];
  for (const [index, d] of state.decisions) {
    if (d.kind === "confirm") confirmations.push(index);
    else edits.push({ index, bbox: clampBox(d.bbox, width, height), category: d.category });
  }
  confirmations.sort((a, b) => a - b);
  edits.sort((a, b) => a.index - b.index);
  const additions = state.additions.map((a) => ({
    bbox: clampBox(a.bbox, width, height),
    category: a.category,
  }));
  return { confirmations, edits, additions };
}
