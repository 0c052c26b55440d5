"""Boot the real server process once and drive it over actual HTTP."""

from __future__ import annotations

import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from tutor.kb import ChunkingPolicy, ingest_materials, save_index
from tutor.provider import HashedTfEmbeddingProvider


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def live_server(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("serve")
    fixtures = Path(__file__).resolve().parents[1] / "src" / "tutor" / "fixtures"
    index_path = tmp / "index.jsonl"
    index = ingest_materials(fixtures / "materials", HashedTfEmbeddingProvider(),
                             ChunkingPolicy(700, 120))
    save_index(index, index_path)
    port = free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "tutor.cli", "serve",
         "--config", str(fixtures / "service_config.json"),
         "--index", str(index_path),
         "--tasks", str(fixtures / "tasks.json"),
         "--log", str(tmp / "logs"),
         "--port", str(port)],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        deadline = time.time() + 20
        while True:
            try:
                if httpx.get(base + "/api/health", timeout=1).status_code == 200:
                    break
            except httpx.HTTPError:
                pass
            if time.time() > deadline:
                proc.kill()
                raise RuntimeError("server did not come up")
            time.sleep(0.2)
        yield base
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_health_over_real_http(live_server):
    body = httpx.get(live_server + "/api/health").json()
    assert body == {"status": "ok", "index_version": 1}


def test_full_conversation_over_real_http(live_server):
    thread_id = httpx.post(live_server + "/api/sessions").json()["thread_id"]
    answered = httpx.post(
        live_server + f"/api/sessions/{thread_id}/messages",
        json={"text": "How do I append an item to a list?", "awareness": "none"},
    ).json()
    assert answered["scope"]["verdict"] == "in_scope"
    assert answered["usage"]["cost"] > 0
    rejected = httpx.post(
        live_server + f"/api/sessions/{thread_id}/messages",
        json={"text": "What is the weather like today?"},
    ).json()
    assert rejected["scope"]["verdict"] == "out_of_scope"


def test_tasks_over_real_http(live_server):
    tasks = httpx.get(live_server + "/api/tasks").json()
    assert [t["task_id"] for t in tasks] == ["collections-1", "functions-1"]
