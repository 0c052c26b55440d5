"""Append-only interaction logging with token and cost accounting.

One JSON line per event into daily-rotated files. A single writer thread
drains a bounded queue; when the queue is full the record is dropped and
counted instead of blocking the student request.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

from .config import Pricing

logger = logging.getLogger(__name__)

_MICRO = Decimal("0.000001")


def compute_cost(prompt_tokens: int, completion_tokens: int, pricing: Pricing) -> Decimal:
    """Exact per-request cost, rounded half-even to 6 decimal places.

    cost = prompt_tokens * prompt_price/1e6 + completion_tokens * completion_price/1e6
    Prices are interpreted by their decimal string form, not binary float value.
    """
    if prompt_tokens < 0 or completion_tokens < 0:
        raise ValueError("token counts must be >= 0")
    prompt_price = Decimal(str(pricing.prompt_price_per_1m))
    completion_price = Decimal(str(pricing.completion_price_per_1m))
    if prompt_price < 0 or completion_price < 0:
        raise ValueError("prices must be >= 0")
    exact = (Decimal(prompt_tokens) * prompt_price + Decimal(completion_tokens) * completion_price) \
        / Decimal(1_000_000)
    return exact.quantize(_MICRO, rounding=ROUND_HALF_EVEN)


def utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass(frozen=True)
class InteractionRecord:
    """One logged exchange; thread_id is the only (pseudonymous) identity."""

    interaction_id: str
    timestamp: str  # UTC, RFC 3339
    thread_id: str
    awareness: str
    task_id: str | None
    prompt_text: str
    response_text: str
    prompt_tokens: int
    completion_tokens: int
    cost: float  # 6 decimal places, from compute_cost
    latency_ms: int
    scope_verdict: str
    leak_action: str
    config_version: int
    status: str = "ok"  # ok | rejected | failed

    def to_json_line(self) -> str:
        data = {"event": "interaction"}
        data.update(asdict(self))
        return json.dumps(data, ensure_ascii=False, separators=(",", ":"))


class InteractionLog:
    """Serialized JSONL appender over a bounded queue, rotating daily by UTC date."""

    def __init__(self, log_dir: str | Path, *, queue_size: int = 1024, fsync: str = "never"):
        if fsync not in ("never", "always"):
            raise ValueError("fsync policy must be 'never' or 'always'")
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self._fsync = fsync
        self._queue: queue.Queue = queue.Queue(maxsize=queue_size)
        self.dropped = 0
        self._drop_lock = threading.Lock()
        self._closed = False
        self._worker = threading.Thread(target=self._drain, name="interaction-log", daemon=True)
        self._worker.start()

    def record(self, rec: InteractionRecord) -> None:
        """Enqueue one interaction; never blocks or fails the calling request."""
        self._enqueue(rec.timestamp, rec.to_json_line())

    def record_config_change(self, config_version: int, changed_fields: list[str],
                             timestamp: str | None = None) -> None:
        ts = timestamp or utc_now_rfc3339()
        line = json.dumps({
            "event": "config_changed",
            "timestamp": ts,
            "config_version": config_version,
            "changed_fields": sorted(changed_fields),
        }, ensure_ascii=False, separators=(",", ":"))
        self._enqueue(ts, line)

    def _enqueue(self, timestamp: str, line: str) -> None:
        if self._closed:
            self._count_drop()
            return
        try:
            self._queue.put_nowait((timestamp, line))
        except queue.Full:
            self._count_drop()

    def _count_drop(self) -> None:
        with self._drop_lock:
            self.dropped += 1

    def _drain(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                self._queue.task_done()
                return
            timestamp, line = item
            try:
                self._append(timestamp, line)
            except OSError as exc:
                self._count_drop()
                logger.warning("interaction log write failed: %s", exc)
            finally:
                self._queue.task_done()

    def _append(self, timestamp: str, line: str) -> None:
        path = self.log_dir / f"interactions-{timestamp[:10]}.jsonl"
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            if self._fsync == "always":
                handle.flush()
                os.fsync(handle.fileno())

    def flush(self) -> None:
        """Block until everything enqueued so far is on disk."""
        self._queue.join()

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self._queue.put(None)
        self._worker.join(timeout=10)


def read_log_dir(log_dir: str | Path) -> list[dict]:
    """Parse every JSONL line under a log directory, oldest file first."""
    records = []
    for path in sorted(Path(log_dir).glob("interactions-*.jsonl")):
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
    return records
