from __future__ import annotations

import json
import threading

import pytest
from fastapi.testclient import TestClient

from tutor.api import create_app
from tutor.config import RuntimeConfig
from tutor.provider import MockChatProvider, ScriptedFailure
from tutor.service import REJECTION_NOTICE, TaskStore, TutorService
from tutor.telemetry import InteractionLog

IN_SCOPE_Q = "How do I append an item to a list?"


@pytest.fixture()
def client(course_index, offline_provider, fixtures_dir, tmp_path):
    log = InteractionLog(tmp_path / "logs")
    service = TutorService(
        index=course_index,
        chat_provider=MockChatProvider(["Here is a hint."] * 100),
        embedder=offline_provider,
        config=RuntimeConfig(scope_threshold=0.16),
        tasks=TaskStore(fixtures_dir / "tasks.json"),
        log=log,
    )
    with TestClient(create_app(service)) as test_client:
        test_client.service = service
        yield test_client
    log.close()


def create_thread(client) -> str:
    response = client.post("/api/sessions")
    assert response.status_code == 200
    return response.json()["thread_id"]


def test_create_session_returns_thread_id(client):
    body = client.post("/api/sessions").json()
    assert set(body) == {"thread_id"}
    assert len(body["thread_id"]) >= 16


def test_message_response_shape_bit_exact(client):
    thread_id = create_thread(client)
    response = client.post(f"/api/sessions/{thread_id}/messages",
                           json={"text": IN_SCOPE_Q, "awareness": "none"})
    assert response.status_code == 200
    body = response.json()
    assert set(body) == {"text", "scope", "leak", "usage", "interaction_id"}
    assert set(body["scope"]) == {"verdict", "top_score"}
    assert set(body["leak"]) == {"leaked", "action"}
    assert set(body["usage"]) == {"prompt_tokens", "completion_tokens", "cost"}
    assert body["text"] == "Here is a hint."
    assert body["scope"]["verdict"] == "in_scope"
    assert body["leak"] == {"leaked": False, "action": "none"}


def test_rejection_over_http(client):
    thread_id = create_thread(client)
    body = client.post(f"/api/sessions/{thread_id}/messages",
                       json={"text": "What is the weather like today?"}).json()
    assert body["text"] == REJECTION_NOTICE
    assert body["scope"]["verdict"] == "out_of_scope"
    assert body["usage"] == {"prompt_tokens": 0, "completion_tokens": 0, "cost": 0.0}


def test_unknown_thread_404(client):
    response = client.post("/api/sessions/ghost/messages", json={"text": IN_SCOPE_Q})
    assert response.status_code == 404
    assert response.json()["error"] == "unknown_thread"


def test_missing_context_400(client):
    thread_id = create_thread(client)
    response = client.post(f"/api/sessions/{thread_id}/messages",
                           json={"text": IN_SCOPE_Q, "awareness": "code"})
    assert response.status_code == 400
    assert response.json()["error"] == "missing_context"


def test_empty_text_400(client):
    thread_id = create_thread(client)
    response = client.post(f"/api/sessions/{thread_id}/messages", json={"text": "  "})
    assert response.status_code == 400


def test_bad_awareness_400(client):
    thread_id = create_thread(client)
    response = client.post(f"/api/sessions/{thread_id}/messages",
                           json={"text": IN_SCOPE_Q, "awareness": "psychic"})
    assert response.status_code == 400


def test_tasks_endpoints(client):
    tasks = client.get("/api/tasks").json()
    assert [t["task_id"] for t in tasks] == ["collections-1", "functions-1"]
    task = client.get("/api/tasks/functions-1").json()
    assert task["title"] == "Temperature converter"
    assert client.get("/api/tasks/nope").status_code == 404


def test_tasks_reload_after_edit(course_index, offline_provider, tmp_path):
    tasks_file = tmp_path / "tasks.json"
    tasks_file.write_text(json.dumps([{"task_id": "a", "title": "Old", "statement": "s"}]))
    store = TaskStore(tasks_file)
    service = TutorService(index=course_index, chat_provider=MockChatProvider(["h"]),
                           embedder=offline_provider, config=RuntimeConfig(),
                           tasks=store)
    with TestClient(create_app(service)) as client:
        assert client.get("/api/tasks/a").json()["title"] == "Old"
        import os
        import time
        new = json.dumps([{"task_id": "a", "title": "New", "statement": "s"}])
        tasks_file.write_text(new)
        past = time.time() + 2
        os.utime(tasks_file, (past, past))  # force a distinct mtime
        assert client.get("/api/tasks/a").json()["title"] == "New"


def test_health(client):
    body = client.get("/api/health").json()
    assert body["status"] == "ok"
    assert body["index_version"] == 1


def test_get_config_shape(client):
    body = client.get("/api/config").json()
    assert body["scope_threshold"] == 0.16
    assert body["default_awareness"] == "none"
    assert body["config_version"] == 1
    assert set(body["pricing"]) == {"prompt_price_per_1m", "completion_price_per_1m"}


def test_put_config_flips_scope_without_restart(client):
    thread_id = create_thread(client)
    first = client.post(f"/api/sessions/{thread_id}/messages", json={"text": IN_SCOPE_Q}).json()
    assert first["scope"]["verdict"] == "in_scope"
    updated = client.put("/api/config", json={"scope_threshold": 0.99}).json()
    assert updated["scope_threshold"] == 0.99
    assert updated["config_version"] == 2
    second = client.post(f"/api/sessions/{thread_id}/messages", json={"text": IN_SCOPE_Q}).json()
    assert second["scope"]["verdict"] == "out_of_scope"


def test_put_config_invalid_max_code_lines(client):
    response = client.put("/api/config", json={"max_code_lines": -1})
    assert response.status_code == 400
    body = response.json()
    assert body["error"] == "invalid_config"
    assert "max_code_lines" in body["fields"]


def test_provider_failure_returns_503(course_index, offline_provider, fixtures_dir):
    service = TutorService(index=course_index,
                           chat_provider=MockChatProvider([ScriptedFailure("down")] * 3),
                           embedder=offline_provider,
                           config=RuntimeConfig(scope_threshold=0.16),
                           tasks=TaskStore(fixtures_dir / "tasks.json"))
    with TestClient(create_app(service), raise_server_exceptions=False) as client:
        thread_id = client.post("/api/sessions").json()["thread_id"]
        response = client.post(f"/api/sessions/{thread_id}/messages", json={"text": IN_SCOPE_Q})
        assert response.status_code == 503
        assert response.json()["error"] == "provider_unavailable"


def test_concurrent_requests_over_http(client):
    thread_ids = [create_thread(client) for _ in range(8)]
    errors = []

    def run(thread_id):
        try:
            for j in range(3):
                response = client.post(f"/api/sessions/{thread_id}/messages",
                                       json={"text": f"{IN_SCOPE_Q} turn {j}"})
                assert response.status_code == 200
        except Exception as exc:  # noqa: BLE001 - surface in main thread
            errors.append(exc)

    threads = [threading.Thread(target=run, args=(t,)) for t in thread_ids]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    for thread_id in thread_ids:
        history = client.service.get_session(thread_id).history
        assert len(history) == 6
