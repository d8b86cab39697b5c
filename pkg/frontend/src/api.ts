/** Typed client for the workbench HTTP API. */

export type SolutionPayload = {
  status: string;
  objective: number | null;
  assignment: Record<string, number>;
  stats: { iterations: number; nodes: number; wall_time_s: number };
};

export type GedReportPayload = {
  ged: number;
  nged: number;
  size_original: number;
  size_updated: number;
  breakdown: Record<string, number>;
  matching: Record<string, Array<[string | null, string | null]>>;
};

export type OutcomePayload = {
  status: "done" | "failed";
  query: string;
  retry_count: number;
  failure_stage: string | null;
  failure_reason: string | null;
  patch: Record<string, string> | null;
  updated_source: string | null;
  original_solution: SolutionPayload | null;
  updated_solution: SolutionPayload | null;
  ged_report: GedReportPayload | null;
  explanation_correctness: string | null;
  explanation_results: string | null;
  impact_rating: number | null;
  interpreter_parts_found: boolean;
  transcript: Array<{ role: string; prompt: string; response: string }>;
};

export type SessionCreatePayload = {
  session_id: string;
  base_solution: SolutionPayload;
};

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    throw new ApiError(response.status, body?.detail ?? body);
  }
  return body as T;
}

export function createClient(base = "") {
  return {
    createSession(modelSource: string, config: Record<string, unknown> = {}) {
      return request<SessionCreatePayload>(base, "/sessions", {
        method: "POST",
        body: JSON.stringify({ model_source: modelSource, config }),
      });
    },
    submitQuery(sessionId: string, text: string) {
      return request<OutcomePayload>(base, `/sessions/${sessionId}/query`, {
        method: "POST",
        body: JSON.stringify({ text }),
      });
    },
    getSession(sessionId: string) {
      return request<Record<string, unknown>>(base, `/sessions/${sessionId}`);
    },
    diff(modelA: string, modelB: string) {
      return request<GedReportPayload>(base, "/diff", {
        method: "POST",
        body: JSON.stringify({ model_a: modelA, model_b: modelB }),
      });
    },
    solve(modelSource: string) {
      return request<SolutionPayload>(base, "/solve", {
        method: "POST",
        body: JSON.stringify({ model_source: modelSource }),
      });
    },
  };
}

export type Client = ReturnType<typeof createClient>;
