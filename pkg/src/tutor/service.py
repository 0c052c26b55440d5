"""Request orchestration: sessions, scope gate, prompt pipeline, telemetry.

`TutorService` is the transport-agnostic core behind the HTTP API. Requests on
the same thread are serialized in arrival order; different threads proceed in
parallel. Config reads are lock-free snapshots of an immutable object and
config writes are atomic swaps, so no request ever sees a half-applied patch.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import policy as policy_mod
from .config import RuntimeConfig, apply_patch
from .errors import MissingContext, ProviderUnavailable, UnknownTask, UnknownThread
from .kb import VectorIndex
from .policy import Awareness, HintState, LeakReport
from .provider import ChatProvider, Completion, EmbeddingProvider
from .retrieval import ScopeDecision, retrieve, scope_check
from .telemetry import InteractionLog, InteractionRecord, compute_cost, utc_now_rfc3339

REJECTION_NOTICE = ("This question appears to be outside the scope of this course. "
                    "I can only help with topics covered in the course materials — "
                    "try asking about the concepts from the lectures, exercises, or examples.")

DEFAULT_RETRIEVAL_K = 4


@dataclass(frozen=True)
class TaskDescription:
    task_id: str
    title: str
    statement: str
    topic: str = ""

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "title": self.title,
                "statement": self.statement, "topic": self.topic}


class TaskStore:
    """Tasks from a JSON file; reloads automatically when the file changes."""

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._mtime = 0.0
        self._tasks: dict[str, TaskDescription] = {}
        self._lock = threading.Lock()
        self.reload()

    def reload(self) -> None:
        with self._lock:
            raw = json.loads(self._path.read_text(encoding="utf-8"))
            tasks = {}
            for item in raw:
                task = TaskDescription(task_id=item["task_id"], title=item["title"],
                                       statement=item["statement"], topic=item.get("topic", ""))
                if not task.statement:
                    raise ValueError(f"task {task.task_id!r} has an empty statement")
                if task.task_id in tasks:
                    raise ValueError(f"duplicate task_id {task.task_id!r}")
                tasks[task.task_id] = task
            self._tasks = tasks
            self._mtime = self._path.stat().st_mtime

    def _maybe_reload(self) -> None:
        try:
            if self._path.stat().st_mtime != self._mtime:
                self.reload()
        except OSError:
            pass  # keep serving the last good snapshot

    def list_tasks(self) -> list[TaskDescription]:
        self._maybe_reload()
        return sorted(self._tasks.values(), key=lambda t: t.task_id)

    def get(self, task_id: str) -> TaskDescription:
        self._maybe_reload()
        try:
            return self._tasks[task_id]
        except KeyError:
            raise UnknownTask(f"no task with id {task_id!r}") from None


@dataclass
class SessionThread:
    """One student conversation; history is append-only."""

    thread_id: str
    created_at: str
    history: list[tuple[str, str, str]] = field(default_factory=list)  # (role, text, timestamp)
    hint_state: HintState = field(default_factory=HintState)
    active_task_id: str | None = None


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int
    completion_tokens: int
    cost: float

    def to_dict(self) -> dict:
        return {"prompt_tokens": self.prompt_tokens,
                "completion_tokens": self.completion_tokens, "cost": self.cost}


@dataclass(frozen=True)
class TutorResponse:
    text: str
    scope: ScopeDecision
    leak: LeakReport
    usage: Usage
    interaction_id: str


class _UsageRecorder:
    """Provider wrapper that collects every completion made for one request."""

    def __init__(self, inner: ChatProvider):
        self._inner = inner
        self.completions: list[Completion] = []

    def complete(self, bundle) -> Completion:
        completion = self._inner.complete(bundle)
        self.completions.append(completion)
        return completion


class TutorService:
    """The prompt manager: wires retrieval, policy, provider, and telemetry."""

    def __init__(self, *, index: VectorIndex, chat_provider: ChatProvider,
                 embedder: EmbeddingProvider, config: RuntimeConfig,
                 tasks: TaskStore | None = None, log: InteractionLog | None = None,
                 retrieval_k: int = DEFAULT_RETRIEVAL_K):
        self.index = index
        self._chat = chat_provider
        self._embedder = embedder
        self._config = config
        self._config_version = 1
        self._config_lock = threading.Lock()
        self._tasks = tasks
        self._log = log
        self._retrieval_k = retrieval_k
        self._sessions: dict[str, SessionThread] = {}
        self._sessions_lock = threading.Lock()
        self._thread_locks: dict[str, threading.Lock] = {}
        self._counter = 0

    # --- sessions ---------------------------------------------------------

    def create_session(self) -> str:
        while True:
            thread_id = secrets.token_urlsafe(16)
            with self._sessions_lock:
                if thread_id in self._sessions:
                    continue
                self._sessions[thread_id] = SessionThread(
                    thread_id=thread_id, created_at=utc_now_rfc3339())
                self._thread_locks[thread_id] = threading.Lock()
                return thread_id

    def get_session(self, thread_id: str) -> SessionThread:
        with self._sessions_lock:
            try:
                return self._sessions[thread_id]
            except KeyError:
                raise UnknownThread(f"no session with thread id {thread_id!r}") from None

    def _lock_for(self, thread_id: str) -> threading.Lock:
        with self._sessions_lock:
            lock = self._thread_locks.get(thread_id)
        if lock is None:
            raise UnknownThread(f"no session with thread id {thread_id!r}")
        return lock

    # --- config -----------------------------------------------------------

    def get_config(self) -> RuntimeConfig:
        return self._config

    @property
    def config_version(self) -> int:
        return self._config_version

    def put_config(self, patch: dict) -> RuntimeConfig:
        """Atomic read-modify-write; takes effect on the next request."""
        with self._config_lock:
            updated = apply_patch(self._config, patch)
            self._config = updated
            self._config_version += 1
            version = self._config_version
        if self._log is not None:
            self._log.record_config_change(version, sorted(patch.keys()))
        return updated

    # --- tasks --------------------------------------------------------------

    def list_tasks(self) -> list[TaskDescription]:
        return self._tasks.list_tasks() if self._tasks else []

    def get_task(self, task_id: str) -> TaskDescription:
        if self._tasks is None:
            raise UnknownTask(f"no task with id {task_id!r}")
        return self._tasks.get(task_id)

    # --- the pipeline -------------------------------------------------------

    def post_message(self, thread_id: str, text: str, awareness: str | None = None,
                     task_id: str | None = None, code: str | None = None) -> TutorResponse:
        """Run one student message through the full pipeline.

        Scope gate first: out-of-scope questions get the fixed rejection
        notification and never reach the completion provider. On provider
        failure the thread history and hint state are left untouched.
        """
        session = self.get_session(thread_id)
        with self._lock_for(thread_id):
            return self._handle_message(session, text, awareness, task_id, code)

    def _handle_message(self, session: SessionThread, text: str, awareness_raw: str | None,
                        task_id: str | None, code: str | None) -> TutorResponse:
        cfg = self._config  # one snapshot per request
        config_version = self._config_version
        started = time.monotonic()

        awareness = Awareness(awareness_raw) if awareness_raw else Awareness(cfg.default_awareness)

        task_text = None
        effective_task_id = task_id or session.active_task_id
        if awareness.wants_task:
            if effective_task_id is None:
                raise MissingContext(f"awareness {awareness.value!r} requires a task_id")
            task_text = self.get_task(effective_task_id).statement
        elif task_id is not None:
            self.get_task(task_id)  # validate the reference even when unused
        if awareness.wants_code and not code:
            raise MissingContext(f"awareness {awareness.value!r} requires a code snapshot")

        # The raw question alone forms the scope query, never task or code context.
        query = self._embedder.embed(text)
        results = retrieve(self.index, query, self._retrieval_k)
        decision = scope_check(results, cfg.scope_threshold)

        if task_id is not None:
            session.active_task_id = task_id

        recorded_task_id = effective_task_id if awareness.wants_task else task_id
        if not decision.in_scope:
            return self._finish_rejected(session, text, awareness, recorded_task_id,
                                         decision, config_version, started)

        is_solution_request = policy_mod.classify_solution_request(
            text, cfg.solution_request_keywords)
        new_hint = policy_mod.update_hint_state(session.hint_state, is_solution_request)

        bundle = policy_mod.assemble_prompt(
            history=[(role, msg) for role, msg, _ts in session.history],
            hint_level=new_hint.level,
            user_message=text,
            awareness=awareness,
            retrieved_chunks=[scored.chunk for scored in results],
            task_text=task_text,
            code_snapshot=code,
            course_name=cfg.course_name,
            system_template=cfg.system_prompt_template,
            token_budget=cfg.token_budget,
        )

        recorder = _UsageRecorder(self._chat)
        try:
            completion = recorder.complete(bundle)
            first_leak = policy_mod.detect_solution_leak(completion.text, cfg.max_code_lines)
            final_text, leak = policy_mod.enforce_guardrail(
                completion.text, first_leak, recorder, bundle, cfg.max_code_lines)
        except ProviderUnavailable:
            self._record_failure(session, text, awareness, recorded_task_id,
                                 decision, config_version, started)
            raise

        prompt_tokens = sum(c.prompt_tokens for c in recorder.completions)
        completion_tokens = sum(c.completion_tokens for c in recorder.completions)
        cost = float(compute_cost(prompt_tokens, completion_tokens, cfg.pricing))
        latency_ms = int((time.monotonic() - started) * 1000)

        session.hint_state = new_hint
        now = utc_now_rfc3339()
        session.history.append(("student", text, now))
        session.history.append(("tutor", final_text, utc_now_rfc3339()))

        interaction_id = self._next_interaction_id()
        self._record(InteractionRecord(
            interaction_id=interaction_id,
            timestamp=now,
            thread_id=session.thread_id,
            awareness=awareness.value,
            task_id=recorded_task_id,
            prompt_text=text,
            response_text=final_text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            cost=cost,
            latency_ms=latency_ms,
            scope_verdict=decision.verdict.value,
            leak_action=leak.action_taken,
            config_version=config_version,
            status="ok",
        ))
        return TutorResponse(
            text=final_text,
            scope=decision,
            leak=leak,
            usage=Usage(prompt_tokens, completion_tokens, cost),
            interaction_id=interaction_id,
        )

    def _finish_rejected(self, session: SessionThread, text: str, awareness: Awareness,
                         task_id: str | None, decision: ScopeDecision,
                         config_version: int, started: float) -> TutorResponse:
        now = utc_now_rfc3339()
        session.history.append(("student", text, now))
        session.history.append(("tutor", REJECTION_NOTICE, utc_now_rfc3339()))
        interaction_id = self._next_interaction_id()
        self._record(InteractionRecord(
            interaction_id=interaction_id,
            timestamp=now,
            thread_id=session.thread_id,
            awareness=awareness.value,
            task_id=task_id,
            prompt_text=text,
            response_text=REJECTION_NOTICE,
            prompt_tokens=0,
            completion_tokens=0,
            cost=0.0,
            latency_ms=int((time.monotonic() - started) * 1000),
            scope_verdict=decision.verdict.value,
            leak_action="none",
            config_version=config_version,
            status="rejected",
        ))
        return TutorResponse(
            text=REJECTION_NOTICE,
            scope=decision,
            leak=LeakReport(leaked=False),
            usage=Usage(0, 0, 0.0),
            interaction_id=interaction_id,
        )

    def _record_failure(self, session: SessionThread, text: str, awareness: Awareness,
                        task_id: str | None, decision: ScopeDecision,
                        config_version: int, started: float) -> None:
        self._record(InteractionRecord(
            interaction_id=self._next_interaction_id(),
            timestamp=utc_now_rfc3339(),
            thread_id=session.thread_id,
            awareness=awareness.value,
            task_id=task_id,
            prompt_text=text,
            response_text="",
            prompt_tokens=0,
            completion_tokens=0,
            cost=0.0,
            latency_ms=int((time.monotonic() - started) * 1000),
            scope_verdict=decision.verdict.value,
            leak_action="none",
            config_version=config_version,
            status="failed",
        ))

    def _record(self, record: InteractionRecord) -> None:
        if self._log is not None:
            self._log.record(record)

    def _next_interaction_id(self) -> str:
        with self._sessions_lock:
            self._counter += 1
            return f"i-{self._counter:08d}-{secrets.token_hex(4)}"

    def health(self) -> dict:
        return {"status": "ok", "index_version": self.index.version}
