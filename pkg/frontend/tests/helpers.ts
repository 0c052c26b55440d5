// Shared component-test scaffolding: a scripted in-memory backend behind a
// fetch stub that records every outbound request.

import type { FetchLike } from "../src/api.js";
import { initApp, type App } from "../src/app.js";

export interface CapturedRequest {
  url: string;
  method: string;
  body: Record<string, unknown> | null;
}

export interface FakeBackend {
  fetch: FetchLike;
  requests: CapturedRequest[];
  messageRequests(): CapturedRequest[];
  replyWith(reply: Partial<BackendReply>): void;
  failNextWith(status: number, error: string, detail: string): void;
  networkDown: boolean;
}

interface BackendReply {
  text: string;
  verdict: "in_scope" | "out_of_scope";
  leakAction: string;
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export function makeFakeBackend(): FakeBackend {
  let nextReply: BackendReply = { text: "Here is a hint.", verdict: "in_scope", leakAction: "none" };
  let failure: { status: number; error: string; detail: string } | null = null;
  let sessionCounter = 0;

  const backend: FakeBackend = {
    requests: [],
    networkDown: false,
    fetch: async (url: string, init?: RequestInit): Promise<Response> => {
      const method = init?.method ?? "GET";
      const body = init?.body ? (JSON.parse(init.body as string) as Record<string, unknown>) : null;
      backend.requests.push({ url, method, body });
      if (backend.networkDown) throw new TypeError("fetch failed");
      if (failure !== null) {
        const f = failure;
        failure = null;
        return jsonResponse({ error: f.error, detail: f.detail }, f.status);
      }
      if (url.endsWith("/api/sessions") && method === "POST") {
        sessionCounter += 1;
        return jsonResponse({ thread_id: `thread-${sessionCounter}` });
      }
      if (url.includes("/messages") && method === "POST") {
        return jsonResponse({
          text: nextReply.text,
          scope: { verdict: nextReply.verdict, top_score: nextReply.verdict === "in_scope" ? 0.4 : 0.05 },
          leak: { leaked: false, action: nextReply.leakAction },
          usage: { prompt_tokens: 10, completion_tokens: 5, cost: 0.000075 },
          interaction_id: `i-${backend.requests.length}`,
        });
      }
      if (url.endsWith("/api/tasks")) {
        return jsonResponse([
          { task_id: "collections-1", title: "Word counts", statement: "Count the words.", topic: "collections" },
          { task_id: "functions-1", title: "Temperature converter", statement: "Convert temperatures.", topic: "functions" },
        ]);
      }
      if (url.endsWith("/api/health")) {
        return jsonResponse({ status: "ok", index_version: 1 });
      }
      return jsonResponse({ error: "not_found", detail: url }, 404);
    },
    messageRequests: () =>
      backend.requests.filter((r) => r.url.includes("/messages") && r.method === "POST"),
    replyWith: (reply) => {
      nextReply = { ...nextReply, ...reply };
    },
    failNextWith: (status, error, detail) => {
      failure = { status, error, detail };
    },
  };
  return backend;
}

export function mountApp(fetchImpl: FetchLike, baseUrl = "http://fake"): App {
  const root = document.createElement("div");
  document.body.append(root);
  return initApp(root, { storage: window.sessionStorage, fetchImpl, baseUrl });
}

export async function typeAndSend(app: App, text: string): Promise<void> {
  app.elements.promptInput.value = text;
  await app.send();
}
