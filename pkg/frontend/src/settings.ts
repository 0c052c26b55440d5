// Session-storage persistence for the settings that should survive a reload:
// base URL, awareness selection, selected task, thread id, editor content.

import type { AwarenessLevel } from "./api.js";
import { AWARENESS_LEVELS } from "./state.js";

const KEY = "course-tutor-ui";

export interface SavedSettings {
  baseUrl: string;
  awareness: AwarenessLevel;
  taskId: string | null;
  threadId: string | null;
  editorContent: string;
}

export const DEFAULT_BASE_URL = "http://127.0.0.1:8000";

export function loadSettings(storage: Storage): SavedSettings {
  const fallback: SavedSettings = {
    baseUrl: DEFAULT_BASE_URL,
    awareness: "none",
    taskId: null,
    threadId: null,
    editorContent: "",
  };
  const raw = storage.getItem(KEY);
  if (raw === null) return fallback;
  try {
    const parsed = JSON.parse(raw) as Partial<SavedSettings>;
    return {
      baseUrl: typeof parsed.baseUrl === "string" ? parsed.baseUrl : fallback.baseUrl,
      awareness: AWARENESS_LEVELS.includes(parsed.awareness as AwarenessLevel)
        ? (parsed.awareness as AwarenessLevel) : fallback.awareness,
      taskId: typeof parsed.taskId === "string" ? parsed.taskId : null,
      threadId: typeof parsed.threadId === "string" ? parsed.threadId : null,
      editorContent: typeof parsed.editorContent === "string" ? parsed.editorContent : "",
    };
  } catch {
    return fallback;
  }
}

export function saveSettings(storage: Storage, settings: SavedSettings): void {
  storage.setItem(KEY, JSON.stringify(settings));
}
