"""Scored, ranked references to chunks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

Origin = Literal["bm25", "dense", "fused", "reranked"]


@dataclass(frozen=True)
class RetrievalResult:
    chunk_id: str
    score: float  # higher is better, distances are negated
    rank: int
    origin: Origin


def ranked(scored: Iterable[tuple[str, float]], origin: Origin, k: int | None = None) -> list[RetrievalResult]:
    """Sort ``(chunk_id, score)`` pairs best-first (ties by ascending id) and assign ranks from 1."""
    ordered = sorted(scored, key=lambda item: (-item[1], item[0]))
    if k is not None:
        ordered = ordered[:k]
    return [RetrievalResult(cid, score, i, origin) for i, (cid, score) in enumerate(ordered, start=1)]
