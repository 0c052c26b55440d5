// HTTP client for the tutor service. The only configuration is the base URL;
// a fetch implementation can be injected so tests intercept every request.

export type AwarenessLevel = "none" | "task" | "code" | "task_and_code";

export interface MessagePayload {
  text: string;
  awareness: AwarenessLevel;
  task_id?: string;
  code?: string;
}

export interface TutorReply {
  text: string;
  scope: { verdict: "in_scope" | "out_of_scope"; top_score: number };
  leak: { leaked: boolean; action: string };
  usage: { prompt_tokens: number; completion_tokens: number; cost: number };
  interaction_id: string;
}

export interface Task {
  task_id: string;
  title: string;
  statement: string;
  topic: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number | null = null,
              readonly code: string | null = null) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string, private readonly fetchImpl?: FetchLike) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const doFetch = this.fetchImpl ?? (globalThis.fetch as FetchLike);
    let response: Response;
    try {
      response = await doFetch(this.baseUrl.replace(/\/$/, "") + path, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch {
      throw new ApiError("cannot reach the tutor service");
    }
    if (!response.ok) {
      let code: string | null = null;
      let detail = `request failed with status ${response.status}`;
      try {
        const parsed = await response.json();
        code = typeof parsed.error === "string" ? parsed.error : null;
        if (typeof parsed.detail === "string") detail = parsed.detail;
        if (code === "invalid_config" && parsed.fields) detail = JSON.stringify(parsed.fields);
      } catch {
        // keep the generic detail
      }
      throw new ApiError(detail, response.status, code);
    }
    return (await response.json()) as T;
  }

  async createSession(): Promise<string> {
    const body = await this.request<{ thread_id: string }>("POST", "/api/sessions");
    return body.thread_id;
  }

  sendMessage(threadId: string, payload: MessagePayload): Promise<TutorReply> {
    return this.request<TutorReply>("POST", `/api/sessions/${threadId}/messages`, payload);
  }

  listTasks(): Promise<Task[]> {
    return this.request<Task[]>("GET", "/api/tasks");
  }

  health(): Promise<{ status: string; index_version: number }> {
    return this.request("GET", "/api/health");
  }
}
