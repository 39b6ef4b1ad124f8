// Wire types mirroring the labeling service API. The client never invents
// scores or budget math: every number shown originates from these payloads
// or from a server response.

export type Box = [number, number, number, number]; // x, y, w, h

export type PredictionPayload = {
  index: number;
  bbox: Box;
  probs: number[];
  source: string;
  score: number | null;
  confidence: number | null;
  selected: boolean;
};

export type TaskPayload = {
  task_id: string;
  page_id: number;
  image: { file_name: string | null; width: number; height: number };
  quota: number;
  ratio: number;
  eta: number;
  remaining_budget: number;
  quartiles: number[];
  predictions: PredictionPayload[];
  uncovered_regions: Box[];
};

export type RoundComplete = { round_complete: true; round: number };

export type SessionStatus = {
  session_id: string;
  phase: string;
  round: number;
  total_spent: number;
  remaining_budget: number;
  labeled_images: number;
  unlabeled_images: number;
  detector_skill: number;
  outstanding_task: string | null;
};

export type EditPayload = { index: number; bbox: Box; category: number };
export type AdditionPayload = { bbox: Box; category: number };

export type SubmitPayload = {
  confirmations: number[];
  edits: EditPayload[];
  additions: AdditionPayload[];
};

export type SubmitSummary = {
  accepted: boolean;
  charge: number;
  objects_labeled: number;
  remaining_budget: number;
};

export type ApiError = { error: string; message?: string; [key: string]: unknown };

export function isRoundComplete(
  task: TaskPayload | RoundComplete
): task is RoundComplete {
  return (task as RoundComplete).round_complete === true;
}
