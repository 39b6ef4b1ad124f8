// Thin client for the labeling service HTTP API.

import {
  ApiError,
  RoundComplete,
  SessionStatus,
  SubmitPayload,
  SubmitSummary,
  TaskPayload,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: ApiError
  ) {
    super(`${detail.error} (HTTP ${status})`);
  }
}

export class AnnotatorClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const body = await resp.json();
    if (!resp.ok) {
      const detail: ApiError = body.detail ?? { error: "unknown-error" };
      throw new ApiRequestError(resp.status, detail);
    }
    return body as T;
  }

  createSession(config: Record<string, unknown>): Promise<{ session_id: string }> {
    return this.request("/sessions", { method: "POST", body: JSON.stringify(config) });
  }

  sessionStatus(sessionId: string): Promise<SessionStatus> {
    return this.request(`/sessions/${sessionId}`);
  }

  nextTask(sessionId: string): Promise<TaskPayload | RoundComplete> {
    return this.request(`/sessions/${sessionId}/tasks/next`, { method: "POST" });
  }

  submitLabels(taskId: string, payload: SubmitPayload): Promise<SubmitSummary> {
    return this.request(`/tasks/${taskId}/labels`, {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }

  advanceRound(sessionId: string): Promise<{ round: number; phase: string }> {
    return this.request(`/sessions/${sessionId}/rounds/advance`, { method: "POST" });
  }

  exportDataset(sessionId: string): Promise<Record<string, unknown>> {
    return this.request(`/sessions/${sessionId}/export`);
  }

  metrics(sessionId: string): Promise<Record<string, unknown>> {
    return this.request(`/sessions/${sessionId}/metrics`);
  }

  imageUrl(fileName: string): string {
    return `${this.baseUrl}/images/${fileName}`;
  }
}
