"""Chat-completion and embedding backends behind one interface.

Ships a remote HTTP client speaking the common chat-completions JSON schema,
plus a deterministic scripted mock and an offline hashed term-frequency
embedder so the whole test suite runs without network access.
"""

from __future__ import annotations

import hashlib
import math
import re
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import httpx
import numpy as np

from .errors import ProviderRejected, ProviderUnavailable, ScriptExhausted

OFFLINE_EMBEDDING_DIM = 256

_TOKEN_RE = re.compile(r"\w+")


def estimate_tokens(text: str) -> int:
    """Provider-agnostic token estimate: ceil(chars / 4)."""
    return math.ceil(len(text) / 4)


class PromptLike(Protocol):
    """What providers need from an assembled prompt."""

    def render_text(self) -> str: ...

    def to_messages(self) -> list[dict[str, str]]: ...


@dataclass
class Completion:
    """One chat-completion result with usage accounting."""

    text: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int
    provider_id: str
    attempts: int = 1
    backoff_ms: tuple[int, ...] = ()


@dataclass
class ProviderConfig:
    """Deployment-fixed provider settings; model parameters never vary per request."""

    endpoint_url: str = ""
    api_key: str = ""
    model_name: str = "course-tutor"
    temperature: float = 0.2
    max_tokens: int = 800
    max_retries: int = 2
    backoff_base_ms: int = 500
    deadline_ms: int = 60_000

    def __repr__(self) -> str:  # keep the key out of logs and tracebacks
        masked = "***" if self.api_key else ""
        return (f"ProviderConfig(endpoint_url={self.endpoint_url!r}, api_key={masked!r}, "
                f"model_name={self.model_name!r}, temperature={self.temperature}, "
                f"max_tokens={self.max_tokens})")


class _Transient(Exception):
    """Internal marker: this attempt failed but a retry may succeed."""

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


def _run_with_retries(attempt, config: ProviderConfig,
                      sleep: Callable[[float], None] = time.sleep):
    """Retry transient failures with exponential backoff, bounded by a deadline."""
    deadline = time.monotonic() + config.deadline_ms / 1000.0
    delays: list[int] = []
    last_error = "unavailable"
    retry_after: float | None = None
    attempts = 0
    for i in range(config.max_retries + 1):
        attempts = i + 1
        try:
            result = attempt()
            if isinstance(result, Completion):
                result.attempts = attempts
                result.backoff_ms = tuple(delays)
            return result
        except _Transient as exc:
            last_error = str(exc)
            retry_after = exc.retry_after
            if i == config.max_retries or time.monotonic() >= deadline:
                break
            delay_ms = config.backoff_base_ms * (2 ** i)
            delays.append(delay_ms)
            sleep(delay_ms / 1000.0)
    raise ProviderUnavailable(last_error, retry_after=retry_after, attempts=attempts)


class ChatProvider(Protocol):
    """Anything that can turn an assembled prompt into a completion."""

    def complete(self, bundle: PromptLike) -> Completion: ...


class HttpChatProvider:
    """Chat-completions client for any endpoint speaking the de-facto JSON schema."""

    def __init__(self, config: ProviderConfig, *, client: httpx.Client | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        if not config.endpoint_url:
            raise ValueError("endpoint_url required for HTTP provider")
        self.config = config
        self._client = client or httpx.Client(timeout=config.deadline_ms / 1000.0)
        self._sleep = sleep

    def complete(self, bundle: PromptLike) -> Completion:
        return _run_with_retries(lambda: self._attempt(bundle), self.config, self._sleep)

    def _attempt(self, bundle: PromptLike) -> Completion:
        payload = {
            "model": self.config.model_name,
            "messages": bundle.to_messages(),
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        headers = {}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        started = time.monotonic()
        try:
            response = self._client.post(self.config.endpoint_url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            # Never interpolate the exception repr: it may echo request headers.
            raise _Transient(f"transport error: {type(exc).__name__}")
        elapsed_ms = int((time.monotonic() - started) * 1000)
        if response.status_code == 429 or response.status_code >= 500:
            raise _Transient(f"upstream status {response.status_code}",
                             retry_after=_parse_retry_after(response))
        if response.status_code >= 400:
            raise ProviderRejected(f"upstream status {response.status_code}",
                                   status_code=response.status_code)
        body = response.json()
        usage = body.get("usage", {})
        text = body["choices"][0]["message"]["content"]
        return Completion(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            latency_ms=elapsed_ms,
            provider_id=f"http:{self.config.model_name}",
        )


def _parse_retry_after(response: httpx.Response) -> float | None:
    raw = response.headers.get("retry-after")
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        return None


@dataclass
class ScriptedFailure:
    """Mock script entry that makes one attempt fail."""

    message: str = "scripted failure"
    transient: bool = True
    retry_after: float | None = None


class MockChatProvider:
    """Replays a fixed script of responses and failures, one entry per attempt.

    Token counts are deterministic (ceil(chars / 4)); script consumption is
    serialized under a lock so concurrent callers each get a whole entry.
    """

    def __init__(self, script: Sequence[str | ScriptedFailure], *,
                 config: ProviderConfig | None = None,
                 sleep: Callable[[float], None] | None = None):
        if not script:
            raise ValueError("mock script must be non-empty")
        self._script = list(script)
        self._cursor = 0
        self._lock = threading.Lock()
        self.config = config or ProviderConfig(backoff_base_ms=1)
        self._sleep = sleep if sleep is not None else (lambda _s: None)
        self.calls = 0  # total attempts consumed, for zero-provider-call assertions

    def complete(self, bundle: PromptLike) -> Completion:
        return _run_with_retries(lambda: self._attempt(bundle), self.config, self._sleep)

    def _attempt(self, bundle: PromptLike) -> Completion:
        with self._lock:
            if self._cursor >= len(self._script):
                raise ScriptExhausted(f"mock script exhausted after {len(self._script)} entries")
            entry = self._script[self._cursor]
            self._cursor += 1
            self.calls += 1
        if isinstance(entry, ScriptedFailure):
            if entry.transient:
                raise _Transient(entry.message, retry_after=entry.retry_after)
            raise ProviderRejected(entry.message)
        return Completion(
            text=entry,
            prompt_tokens=estimate_tokens(bundle.render_text()),
            completion_tokens=estimate_tokens(entry),
            latency_ms=0,
            provider_id="mock",
        )


def mock_provider(script: Sequence[str | ScriptedFailure], **kwargs) -> MockChatProvider:
    """Build a scripted mock provider (keyword passthrough for config/sleep)."""
    return MockChatProvider(script, **kwargs)


# --- embeddings -----------------------------------------------------------

class EmbeddingProvider(Protocol):
    """Maps text to a unit-norm vector of a fixed dimension."""

    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


# English function words carry no topical signal and would otherwise dominate
# short questions; dropping them is what makes the scope gate separable at
# dimension 256.
_FUNCTION_WORDS = frozenset("""a about above after again all am an and any are as at be because
been before being below between both but by can cannot could did do does doing down during each
few for from further had has have having he her here hers herself him himself his how i if in
into is it its itself just like me might more most must my myself no nor not now of off on once
only or other our ours ourselves out over own same shall she should so some such than that the
their theirs them themselves then there these they this those through to too under until up very
was we were what when where which while who whom why will with would you your yours yourself
yourselves dont cant wont isnt arent wasnt werent im ive id youre youve lets us tell please
today yesterday tomorrow yes ok okay hi hello thanks thank""".split())


class HashedTfEmbeddingProvider:
    """Offline embedder: hashed term frequencies over lowercased word tokens.

    Each content token (function words are dropped) lands in two md5-derived
    slots with md5-derived signs, weighted by the square root of its count, and
    the vector is L2-normalized. The signed double hashing makes unrelated
    texts cancel toward zero cosine instead of accumulating collision mass.
    Pure function of the text: no process salt, identical vectors across runs
    and machines.
    """

    def __init__(self, dimension: int = OFFLINE_EMBEDDING_DIM):
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        tokens = [t for t in _TOKEN_RE.findall(text.lower()) if t not in _FUNCTION_WORDS]
        if not tokens:
            # Keep the unit-norm postcondition for degenerate inputs.
            tokens = ["\x00empty"]
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for token, count in counts.items():
            weight = math.sqrt(count)
            for slot, sign in self._slots(token):
                vec[slot] += sign * weight
        return vec / np.linalg.norm(vec)

    def _slots(self, token: str) -> list[tuple[int, float]]:
        out = []
        for salt in ("0:", "1:"):
            digest = hashlib.md5((salt + token).encode("utf-8")).digest()
            slot = int.from_bytes(digest[:8], "big") % self.dimension
            sign = 1.0 if digest[8] % 2 == 0 else -1.0
            out.append((slot, sign))
        return out


class HttpEmbeddingProvider:
    """Remote embedding endpoint sharing the retry/backoff machinery."""

    def __init__(self, config: ProviderConfig, dimension: int, *,
                 client: httpx.Client | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        if not config.endpoint_url:
            raise ValueError("endpoint_url required for HTTP embedding provider")
        self.config = config
        self.dimension = dimension
        self._client = client or httpx.Client(timeout=config.deadline_ms / 1000.0)
        self._sleep = sleep

    def embed(self, text: str) -> np.ndarray:
        return _run_with_retries(lambda: self._attempt(text), self.config, self._sleep)

    def _attempt(self, text: str) -> np.ndarray:
        headers = {}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        try:
            response = self._client.post(
                self.config.endpoint_url,
                json={"model": self.config.model_name, "input": text},
                headers=headers,
            )
        except httpx.HTTPError as exc:
            raise _Transient(f"transport error: {type(exc).__name__}")
        if response.status_code == 429 or response.status_code >= 500:
            raise _Transient(f"upstream status {response.status_code}",
                             retry_after=_parse_retry_after(response))
        if response.status_code >= 400:
            raise ProviderRejected(f"upstream status {response.status_code}",
                                   status_code=response.status_code)
        raw = response.json()["data"][0]["embedding"]
        vec = np.asarray(raw, dtype=np.float64)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise _Transient("embedding endpoint returned a zero vector")
        return vec / norm
