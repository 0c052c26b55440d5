"""Offline analysis of interaction logs: merge split questions, tag, aggregate.

Students often send one question as several rapid-fire prompts; a time-window
rule reassembles those into merged interactions. Category tags are applied by
humans through the CLI (never auto-classified) and persist in a sidecar JSON
file keyed by merged id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .errors import UnknownCategory, UnknownMergedId, UnsortedInput

CATEGORIES = (
    "GiveExample",
    "FollowUp",
    "CourseMaterial",
    "CodeCorrectness",
    "ExplainCode",
    "ExplainConcept",
    "ExplainTaskDetail",
    "HowTo",
    "Implement",
    "Unrelated",
    "CodeOnly",
    "Misc",
)

DEFAULT_MERGE_WINDOW_SECONDS = 60.0


@dataclass
class MergedInteraction:
    """One logical student question reassembled from rapid-fire prompts."""

    merged_id: str
    thread_id: str
    interaction_ids: list[str]
    combined_text: str
    first_timestamp: str
    awareness: str = "none"
    category: str | None = None

    def to_dict(self) -> dict:
        return {
            "merged_id": self.merged_id,
            "thread_id": self.thread_id,
            "interaction_ids": list(self.interaction_ids),
            "combined_text": self.combined_text,
            "first_timestamp": self.first_timestamp,
            "awareness": self.awareness,
        }


def _parse_timestamp(raw: str) -> datetime:
    return datetime.strptime(raw, "%Y-%m-%dT%H:%M:%S.%fZ")


def merge_interactions(records: list[dict],
                       window_seconds: float = DEFAULT_MERGE_WINDOW_SECONDS) -> list[MergedInteraction]:
    """Group consecutive same-thread prompts with inter-arrival <= window.

    Input must be sorted by (thread_id, timestamp); grouping is transitive, so
    a chain of small gaps collapses into one merged interaction. Every input
    record lands in exactly one merged interaction.
    """
    keys = [(rec["thread_id"], rec["timestamp"]) for rec in records]
    if keys != sorted(keys):
        raise UnsortedInput("records must be sorted by (thread_id, timestamp)")

    merged: list[MergedInteraction] = []
    group: list[dict] = []

    def close_group() -> None:
        if not group:
            return
        first = group[0]
        merged.append(MergedInteraction(
            merged_id=first["interaction_id"],
            thread_id=first["thread_id"],
            interaction_ids=[rec["interaction_id"] for rec in group],
            combined_text="\n".join(rec["prompt_text"] for rec in group),
            first_timestamp=first["timestamp"],
            awareness=first.get("awareness", "none"),
        ))

    for rec in records:
        if group and rec["thread_id"] == group[-1]["thread_id"]:
            gap = (_parse_timestamp(rec["timestamp"])
                   - _parse_timestamp(group[-1]["timestamp"])).total_seconds()
            if gap <= window_seconds:
                group.append(rec)
                continue
        close_group()
        group = [rec]
    close_group()
    return merged


def save_merged(merged: list[MergedInteraction], path: str | Path) -> None:
    payload = [m.to_dict() for m in merged]
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                          encoding="utf-8")


def load_merged(path: str | Path) -> list[MergedInteraction]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [MergedInteraction(
        merged_id=item["merged_id"],
        thread_id=item["thread_id"],
        interaction_ids=list(item["interaction_ids"]),
        combined_text=item["combined_text"],
        first_timestamp=item["first_timestamp"],
        awareness=item.get("awareness", "none"),
    ) for item in payload]


# --- tagging ----------------------------------------------------------------

def load_tags(path: str | Path) -> dict[str, str]:
    """Read the sidecar tag table; missing file means no tags yet."""
    p = Path(path)
    if not p.exists():
        return {}
    data = json.loads(p.read_text(encoding="utf-8"))
    for merged_id, category in data.items():
        if category not in CATEGORIES:
            raise UnknownCategory(f"tag file maps {merged_id!r} to unknown category {category!r}")
    return dict(data)


def save_tags(tags: dict[str, str], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(dict(sorted(tags.items())), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8")


def tag_interaction(tags: dict[str, str], merged: list[MergedInteraction],
                    merged_id: str, category: str) -> dict[str, str]:
    """Assign a category (idempotent, last write wins); returns the updated table."""
    if category not in CATEGORIES:
        raise UnknownCategory(f"{category!r} is not one of the {len(CATEGORIES)} categories")
    if merged_id not in {m.merged_id for m in merged}:
        raise UnknownMergedId(f"no merged interaction with id {merged_id!r}")
    updated = dict(tags)
    updated[merged_id] = category
    return updated


# --- aggregation -------------------------------------------------------------

@dataclass(frozen=True)
class CategoryStats:
    rows: tuple[tuple[str, int], ...]  # (category, count), descending count then name
    total: int
    untagged: int


def category_stats(merged: list[MergedInteraction], tags: dict[str, str],
                   awareness: str | None = None) -> CategoryStats:
    """Count tagged interactions per category; untagged are reported separately.

    Rows are ordered by descending count, ties alphabetical, zero counts omitted.
    The optional awareness filter keeps only interactions logged at that level.
    """
    counts: dict[str, int] = {}
    untagged = 0
    for item in merged:
        if awareness is not None and item.awareness != awareness:
            continue
        category = tags.get(item.merged_id)
        if category is None:
            untagged += 1
            continue
        if category not in CATEGORIES:
            raise UnknownCategory(f"{category!r} is not a known category")
        counts[category] = counts.get(category, 0) + 1
    rows = tuple(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    return CategoryStats(rows=rows, total=sum(counts.values()), untagged=untagged)


def format_stats(stats: CategoryStats, fmt: str = "table") -> str:
    """Render stats as an aligned table, CSV, or JSON (byte-stable)."""
    if fmt == "json":
        payload = {
            "categories": [{"category": c, "count": n} for c, n in stats.rows],
            "total": stats.total,
            "untagged": stats.untagged,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
    if fmt == "csv":
        lines = ["category,count"]
        lines += [f"{c},{n}" for c, n in stats.rows]
        lines.append(f"Total,{stats.total}")
        return "\n".join(lines) + "\n"
    if fmt == "table":
        width = max([len("Category")] + [len(c) for c, _ in stats.rows])
        lines = [f"{'Category'.ljust(width)}  Count", f"{'-' * width}  -----"]
        lines += [f"{c.ljust(width)}  {n:5d}" for c, n in stats.rows]
        lines.append(f"{'-' * width}  -----")
        lines.append(f"{'Total'.ljust(width)}  {stats.total:5d}")
        if stats.untagged:
            lines.append(f"({stats.untagged} untagged interactions not counted)")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
