from __future__ import annotations

import json

import httpx
import pytest

from tutor.errors import ProviderRejected, ProviderUnavailable, ScriptExhausted
from tutor.kb import CourseChunk
from tutor.policy import Awareness, assemble_prompt
from tutor.provider import (HttpChatProvider, HttpEmbeddingProvider, MockChatProvider,
                            ProviderConfig, ScriptedFailure, mock_provider)


def bundle(message: str = "How do I append to a list?"):
    return assemble_prompt(
        history=[], hint_level=1, user_message=message, awareness=Awareness.NONE,
        retrieved_chunks=[CourseChunk(chunk_id="d:0000", doc_id="d", seq=0, text="lists")],
    )


# --- mock provider -------------------------------------------------------------

def test_mock_replays_script_in_order():
    provider = MockChatProvider(["a", "b"])
    assert provider.complete(bundle()).text == "a"
    assert provider.complete(bundle()).text == "b"


def test_mock_script_exhausted():
    provider = MockChatProvider(["a"])
    provider.complete(bundle())
    with pytest.raises(ScriptExhausted):
        provider.complete(bundle())


def test_mock_token_count_is_ceil_chars_over_four():
    provider = MockChatProvider(["x" * 20])
    completion = provider.complete(bundle())
    assert completion.completion_tokens == 5
    assert completion.prompt_tokens == -(-len(bundle().render_text()) // 4)


def test_mock_fail_twice_then_succeed_records_attempts():
    sleeps = []
    provider = MockChatProvider(
        [ScriptedFailure("boom"), ScriptedFailure("boom"), "recovered"],
        sleep=sleeps.append)
    completion = provider.complete(bundle())
    assert completion.text == "recovered"
    assert completion.attempts == 3
    assert completion.backoff_ms == (1, 2)  # base 1 ms config doubles per retry
    assert sleeps == [0.001, 0.002]


def test_mock_always_failing_raises_after_three_attempts():
    provider = MockChatProvider([ScriptedFailure("boom")] * 5)
    with pytest.raises(ProviderUnavailable) as excinfo:
        provider.complete(bundle())
    assert excinfo.value.attempts == 3
    assert provider.calls == 3


def test_mock_nontransient_failure_not_retried():
    provider = MockChatProvider([ScriptedFailure("denied", transient=False), "unused"])
    with pytest.raises(ProviderRejected):
        provider.complete(bundle())
    assert provider.calls == 1


def test_mock_is_deterministic():
    script = ["first answer", ScriptedFailure("x"), "second answer"]
    results = []
    for _ in range(2):
        provider = mock_provider(list(script))
        first = provider.complete(bundle())
        second = provider.complete(bundle())
        results.append([(c.text, c.prompt_tokens, c.completion_tokens, c.attempts)
                        for c in (first, second)])
    assert results[0] == results[1]


# --- retry/backoff schedule -------------------------------------------------------

def test_backoff_schedule_base_500_default():
    sleeps = []
    provider = MockChatProvider(
        [ScriptedFailure("a"), ScriptedFailure("b"), "done"],
        config=ProviderConfig(backoff_base_ms=500), sleep=sleeps.append)
    completion = provider.complete(bundle())
    assert sleeps == [0.5, 1.0]
    assert completion.backoff_ms == (500, 1000)


# --- HTTP chat provider -------------------------------------------------------------

def http_provider(handler, **config_kwargs) -> HttpChatProvider:
    config = ProviderConfig(endpoint_url="https://llm.example/v1/chat/completions",
                            api_key="sk-secret-123", backoff_base_ms=1, **config_kwargs)
    transport = httpx.MockTransport(handler)
    return HttpChatProvider(config, client=httpx.Client(transport=transport),
                            sleep=lambda _s: None)


def chat_response(text: str, prompt_tokens: int = 11, completion_tokens: int = 7):
    return httpx.Response(200, json={
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    })


def test_http_success_parses_usage():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["json"] = json.loads(request.content)
        seen["auth"] = request.headers.get("authorization")
        return chat_response("hello!", 42, 9)

    completion = http_provider(handler).complete(bundle())
    assert completion.text == "hello!"
    assert (completion.prompt_tokens, completion.completion_tokens) == (42, 9)
    assert completion.provider_id == "http:course-tutor"
    assert seen["auth"] == "Bearer sk-secret-123"
    assert seen["json"]["messages"][-1]["role"] == "user"
    assert seen["json"]["temperature"] == 0.2


def test_http_4xx_rejected_without_retry():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, json={"error": "bad key"})

    with pytest.raises(ProviderRejected) as excinfo:
        http_provider(handler).complete(bundle())
    assert excinfo.value.status_code == 401
    assert len(calls) == 1


def test_http_5xx_retried_then_unavailable():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500)

    with pytest.raises(ProviderUnavailable) as excinfo:
        http_provider(handler).complete(bundle())
    assert len(calls) == 3
    assert excinfo.value.attempts == 3


def test_http_429_surfaces_retry_after():
    def handler(request):
        return httpx.Response(429, headers={"Retry-After": "17"})

    with pytest.raises(ProviderUnavailable) as excinfo:
        http_provider(handler, max_retries=0).complete(bundle())
    assert excinfo.value.retry_after == 17.0


def test_http_transient_then_success():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(503)
        return chat_response("third time lucky")

    completion = http_provider(handler).complete(bundle())
    assert completion.text == "third time lucky"
    assert completion.attempts == 3


def test_api_key_never_leaks():
    """The key must not appear in the serialized bundle, errors, or repr."""
    key = "sk-secret-123"

    def handler(request):
        return httpx.Response(500)

    provider = http_provider(handler)
    assert key not in bundle().render_text()
    assert key not in json.dumps(bundle().to_messages())
    assert key not in repr(provider.config)
    with pytest.raises(ProviderUnavailable) as excinfo:
        provider.complete(bundle())
    assert key not in str(excinfo.value)
    assert key not in repr(excinfo.value)


def test_env_var_overrides_config_key(monkeypatch, tmp_path, course_index):
    import json as json_mod

    from tutor.cli import build_service

    monkeypatch.setenv("TUTOR_API_KEY", "env-key-999")
    config = {"runtime": {}, "provider": {"kind": "http", "endpoint_url": "https://x/y",
                                          "api_key": "file-key"}}
    (tmp_path / "config.json").write_text(json_mod.dumps(config))
    from tutor.kb import save_index
    save_index(course_index, tmp_path / "index")
    (tmp_path / "tasks.json").write_text("[]")
    service = build_service(tmp_path / "config.json", tmp_path / "index",
                            tmp_path / "tasks.json", tmp_path / "logs")
    assert service._chat.config.api_key == "env-key-999"


# --- HTTP embedding provider ----------------------------------------------------------

def test_http_embedding_normalizes_and_retries():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            return httpx.Response(500)
        return httpx.Response(200, json={"data": [{"embedding": [3.0, 4.0]}]})

    config = ProviderConfig(endpoint_url="https://llm.example/v1/embeddings",
                            backoff_base_ms=1)
    provider = HttpEmbeddingProvider(config, dimension=2,
                                     client=httpx.Client(transport=httpx.MockTransport(handler)),
                                     sleep=lambda _s: None)
    vec = provider.embed("hello")
    assert vec == pytest.approx([0.6, 0.8])
    assert len(calls) == 2
