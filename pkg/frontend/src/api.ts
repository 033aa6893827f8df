/** Typed client for the annotation server's JSON API. */

export type LabelValue = "helpful" | "harmful" | "neither";

export interface NextItem {
  sentence_id: string;
  sentence_text: string;
}

export interface SessionView {
  session_id: string;
  annotator_id: string;
  total: number;
  labeled: number;
  label_counts: Record<LabelValue, number>;
  next?: NextItem;
}

export interface Agreement {
  kappa: number;
  p_o: number;
  p_e: number;
  n_items: number;
  labels: LabelValue[];
  cross_table: number[][];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function asJson<T>(response: Response): Promise<T> {
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // non-JSON error bodies fall back to the status text below
  }
  if (!response.ok) {
    const detail =
      body && typeof body === "object" && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : response.statusText;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  async view(sessionId: string): Promise<SessionView> {
    const response = await fetch(
      `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/next`,
    );
    return asJson<SessionView>(response);
  }

  async label(sessionId: string, sentenceId: string, label: LabelValue): Promise<SessionView> {
    const response = await fetch(
      `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/labels`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ sentence_id: sentenceId, label }),
      },
    );
    return asJson<SessionView>(response);
  }

  async agreement(a: string, b: string): Promise<Agreement> {
    const query = new URLSearchParams({ a, b });
    const response = await fetch(`${this.base}/api/agreement?${query}`);
    return asJson<Agreement>(response);
  }
}
