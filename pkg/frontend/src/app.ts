// The tutor page: chat pane, context-awareness selector, task panel, and a
// plain code editor whose content rides along when code awareness is on.
// Everything is rendered programmatically so component tests can mount the
// whole app against a fake fetch.

import { ApiClient, ApiError, type AwarenessLevel, type FetchLike, type Task,
         type TutorReply } from "./api.js";
import { DEFAULT_BASE_URL, loadSettings, saveSettings } from "./settings.js";
import { AWARENESS_LEVELS, buildMessagePayload, initialState, type ViewState } from "./state.js";

export interface AppOptions {
  storage: Storage;
  fetchImpl?: FetchLike;
  baseUrl?: string;
}

export interface App {
  state: ViewState;
  elements: {
    transcript: HTMLUListElement;
    promptInput: HTMLTextAreaElement;
    sendButton: HTMLButtonElement;
    banner: HTMLDivElement;
    editor: HTMLTextAreaElement;
    gutter: HTMLDivElement;
    taskSelect: HTMLSelectElement;
    taskStatement: HTMLDivElement;
    baseUrlInput: HTMLInputElement;
    newSessionButton: HTMLButtonElement;
    status: HTMLSpanElement;
  };
  send(): Promise<void>;
  setAwareness(level: AwarenessLevel): void;
  selectTask(taskId: string | null): void;
  newSession(): void;
  refreshTasks(): Promise<void>;
}

const AWARENESS_LABELS: Record<AwarenessLevel, string> = {
  none: "No context",
  task: "Task description",
  code: "Current code",
  task_and_code: "Task + code",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function initApp(root: HTMLElement, options: AppOptions): App {
  const storage = options.storage;
  const saved = loadSettings(storage);
  if (options.baseUrl) saved.baseUrl = options.baseUrl;

  const state: ViewState = initialState();
  state.awareness = saved.awareness;
  state.taskId = saved.taskId;
  state.threadId = saved.threadId;
  state.editorContent = saved.editorContent;

  let api = new ApiClient(saved.baseUrl, options.fetchImpl);
  let tasks: Task[] = [];

  // --- static structure ---------------------------------------------------
  root.innerHTML = "";
  const header = el("header", "top-bar");
  header.append(el("h1", "title", "Course Tutor"));
  const status = el("span", "status status-unknown", "…");
  const baseUrlInput = el("input", "base-url") as HTMLInputElement;
  baseUrlInput.value = saved.baseUrl;
  baseUrlInput.title = "Tutor service base URL";
  const newSessionButton = el("button", "new-session", "New session");
  header.append(baseUrlInput, status, newSessionButton);

  const banner = el("div", "banner hidden");
  banner.setAttribute("role", "alert");

  const main = el("main", "layout");

  const chatPane = el("section", "chat-pane");
  const transcript = el("ul", "transcript") as HTMLUListElement;
  const form = el("form", "prompt-form");
  const promptInput = el("textarea", "prompt-input") as HTMLTextAreaElement;
  promptInput.placeholder = "Ask about the course material…";
  promptInput.rows = 3;
  const sendButton = el("button", "send", "Send") as HTMLButtonElement;
  sendButton.type = "submit";
  form.append(promptInput, sendButton);
  chatPane.append(transcript, form);

  const sidePane = el("section", "side-pane");

  const awarenessBox = el("fieldset", "awareness");
  awarenessBox.append(el("legend", undefined, "Context awareness"));
  const radios = new Map<AwarenessLevel, HTMLInputElement>();
  for (const level of AWARENESS_LEVELS) {
    const label = el("label", "awareness-option");
    const radio = el("input") as HTMLInputElement;
    radio.type = "radio";
    radio.name = "awareness";
    radio.value = level;
    radios.set(level, radio);
    label.append(radio, document.createTextNode(" " + AWARENESS_LABELS[level]));
    awarenessBox.append(label);
  }

  const taskBox = el("div", "task-panel");
  taskBox.append(el("h2", undefined, "Task description"));
  const taskSelect = el("select", "task-select") as HTMLSelectElement;
  const taskStatement = el("div", "task-statement", "No task selected.");
  taskBox.append(taskSelect, taskStatement);

  const editorBox = el("div", "editor-panel");
  editorBox.append(el("h2", undefined, "Current solution"));
  const editorWrap = el("div", "editor-wrap");
  const gutter = el("div", "gutter", "1");
  const editor = el("textarea", "editor") as HTMLTextAreaElement;
  editor.spellcheck = false;
  editor.value = state.editorContent;
  editorWrap.append(gutter, editor);
  editorBox.append(editorWrap);

  sidePane.append(awarenessBox, taskBox, editorBox);
  main.append(chatPane, sidePane);
  root.append(header, banner, main);

  // --- rendering ------------------------------------------------------------
  function renderTranscript(): void {
    transcript.innerHTML = "";
    for (const entry of state.transcript) {
      const item = el("li", "msg " + entry.role);
      if (entry.pending) item.classList.add("pending");
      if (entry.rejected) item.classList.add("rejected");
      item.textContent = entry.pending ? "…" : entry.text;
      transcript.append(item);
    }
    transcript.scrollTop = transcript.scrollHeight;
  }

  function renderGutter(): void {
    const lines = editor.value.split("\n").length;
    gutter.textContent = Array.from({ length: lines }, (_v, i) => String(i + 1)).join("\n");
  }

  function renderStatus(): void {
    status.className = "status status-" + state.connection;
    status.textContent = state.connection === "ok" ? "connected"
      : state.connection === "error" ? "offline" : "…";
  }

  function renderTaskStatement(): void {
    const task = tasks.find((t) => t.task_id === state.taskId);
    taskStatement.textContent = task ? task.statement : "No task selected.";
  }

  function showBanner(message: string): void {
    banner.textContent = message;
    banner.classList.remove("hidden");
  }

  function clearBanner(): void {
    banner.textContent = "";
    banner.classList.add("hidden");
  }

  function persist(): void {
    saveSettings(storage, {
      baseUrl: baseUrlInput.value,
      awareness: state.awareness,
      taskId: state.taskId,
      threadId: state.threadId,
      editorContent: state.editorContent,
    });
  }

  function syncAwarenessRadios(): void {
    for (const [level, radio] of radios) radio.checked = level === state.awareness;
  }

  // --- actions -----------------------------------------------------------------
  function setAwareness(level: AwarenessLevel): void {
    state.awareness = level;
    syncAwarenessRadios();
    persist();
  }

  function selectTask(taskId: string | null): void {
    state.taskId = taskId;
    taskSelect.value = taskId ?? "";
    renderTaskStatement();
    persist();
  }

  function newSession(): void {
    state.threadId = null;
    state.transcript = [];
    clearBanner();
    renderTranscript();
    persist();
  }

  async function refreshTasks(): Promise<void> {
    tasks = await api.listTasks();
    taskSelect.innerHTML = "";
    const blank = el("option", undefined, "— no task —");
    blank.setAttribute("value", "");
    taskSelect.append(blank);
    for (const task of tasks) {
      const option = el("option", undefined, task.title);
      option.setAttribute("value", task.task_id);
      taskSelect.append(option);
    }
    if (state.taskId && !tasks.some((t) => t.task_id === state.taskId)) {
      state.taskId = null;
    }
    taskSelect.value = state.taskId ?? "";
    renderTaskStatement();
  }

  async function checkHealth(): Promise<void> {
    try {
      await api.health();
      state.connection = "ok";
    } catch {
      state.connection = "error";
    }
    renderStatus();
  }

  async function send(): Promise<void> {
    const text = promptInput.value.trim();
    if (!text || sendButton.disabled) return;
    clearBanner();
    sendButton.disabled = true;
    const before = state.transcript.length;
    state.transcript.push({ role: "student", text, pending: false, rejected: false });
    state.transcript.push({ role: "tutor", text: "", pending: true, rejected: false });
    renderTranscript();
    try {
      if (state.threadId === null) {
        state.threadId = await api.createSession();
        persist();
      }
      const payload = buildMessagePayload(state, text);
      const reply: TutorReply = await api.sendMessage(state.threadId, payload);
      const placeholder = state.transcript[state.transcript.length - 1]!;
      placeholder.pending = false;
      placeholder.text = reply.text;
      placeholder.rejected = reply.scope.verdict === "out_of_scope";
      state.connection = "ok";
      promptInput.value = "";
    } catch (error) {
      // Roll the transcript back: errors are status messages, not messages.
      state.transcript.length = before;
      if (error instanceof ApiError) {
        showBanner(error.message);
        if (error.status === null) state.connection = "error";
      } else {
        showBanner("unexpected error; see the browser console");
        console.error(error);
      }
    } finally {
      sendButton.disabled = false;
      renderTranscript();
      renderStatus();
    }
  }

  // --- event wiring -----------------------------------------------------------
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void send();
  });
  for (const [level, radio] of radios) {
    radio.addEventListener("change", () => {
      if (radio.checked) setAwareness(level);
    });
  }
  taskSelect.addEventListener("change", () => {
    selectTask(taskSelect.value === "" ? null : taskSelect.value);
  });
  editor.addEventListener("input", () => {
    state.editorContent = editor.value;
    renderGutter();
    persist();
  });
  newSessionButton.addEventListener("click", () => newSession());
  baseUrlInput.addEventListener("change", () => {
    api = new ApiClient(baseUrlInput.value || DEFAULT_BASE_URL, options.fetchImpl);
    state.threadId = null;
    persist();
    void checkHealth();
    void refreshTasks().catch(() => undefined);
  });

  syncAwarenessRadios();
  renderGutter();
  renderTranscript();
  renderStatus();
  renderTaskStatement();

  return {
    state,
    elements: { transcript, promptInput, sendButton, banner, editor, gutter,
                taskSelect, taskStatement, baseUrlInput, newSessionButton, status },
    send,
    setAwareness,
    selectTask,
    newSession,
    refreshTasks,
  };
}
