"""Top-k similarity search and the course-scope gate.

The scope gate looks only at retrieval scores, never at text, so scope
decisions are purely a function of how well the question matches the
ingested course material.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch
from .kb import CourseChunk, VectorIndex


class ScopeVerdict(str, Enum):
    IN_SCOPE = "in_scope"
    OUT_OF_SCOPE = "out_of_scope"


@dataclass(frozen=True)
class ScoredChunk:
    chunk: CourseChunk
    score: float


@dataclass(frozen=True)
class ScopeDecision:
    verdict: ScopeVerdict
    top_score: float
    threshold: float

    @property
    def in_scope(self) -> bool:
        return self.verdict is ScopeVerdict.IN_SCOPE


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors; symmetric, in [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector dimensions differ: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def retrieve(index: VectorIndex, query: np.ndarray, k: int) -> list[ScoredChunk]:
    """Exact top-k chunks under cosine, ties broken by ascending chunk_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        return []
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (index.dimension,):
        raise DimensionMismatch(
            f"query dimension {query.shape} does not match index dimension {index.dimension}")
    scores = index.matrix @ query
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.chunks[i].chunk_id))
    return [ScoredChunk(chunk=index.chunks[i], score=float(scores[i])) for i in order[:k]]


def scope_check(results: list[ScoredChunk], threshold: float) -> ScopeDecision:
    """In scope iff something was retrieved and the best score clears the threshold."""
    if not results:
        return ScopeDecision(ScopeVerdict.OUT_OF_SCOPE, top_score=0.0, threshold=threshold)
    top = results[0].score
    verdict = ScopeVerdict.IN_SCOPE if top >= threshold else ScopeVerdict.OUT_OF_SCOPE
    return ScopeDecision(verdict, top_score=top, threshold=threshold)
