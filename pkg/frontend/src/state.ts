// View state and the pure payload rule: what gets sent is a function of the
// visible state plus the typed text, nothing else.

import type { AwarenessLevel, MessagePayload } from "./api.js";

export interface ChatEntry {
  role: "student" | "tutor";
  text: string;
  pending: boolean;
  rejected: boolean;
}

export interface ViewState {
  threadId: string | null;
  transcript: ChatEntry[];
  awareness: AwarenessLevel;
  taskId: string | null;
  editorContent: string;
  connection: "unknown" | "ok" | "error";
}

export const AWARENESS_LEVELS: AwarenessLevel[] = ["none", "task", "code", "task_and_code"];

export function initialState(): ViewState {
  return {
    threadId: null,
    transcript: [],
    awareness: "none",
    taskId: null,
    editorContent: "",
    connection: "unknown",
  };
}

export function awarenessIncludesTask(level: AwarenessLevel): boolean {
  return level === "task" || level === "task_and_code";
}

export function awarenessIncludesCode(level: AwarenessLevel): boolean {
  return level === "code" || level === "task_and_code";
}

export function buildMessagePayload(state: ViewState, text: string): MessagePayload {
  const payload: MessagePayload = { text, awareness: state.awareness };
  if (awarenessIncludesTask(state.awareness) && state.taskId !== null) {
    payload.task_id = state.taskId;
  }
  if (awarenessIncludesCode(state.awareness)) {
    payload.code = state.editorContent;
  }
  return payload;
}
