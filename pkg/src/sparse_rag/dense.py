"""Exact vector scoring and top-k search over chunk embeddings."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Collection, MutableMapping, Sequence

import numpy as np

from sparse_rag.chunking import Chunk
from sparse_rag.results import RetrievalResult, ranked


class Metric(str, enum.Enum):
    COSINE_SIMILARITY = "cosine_similarity"
    COSINE_DISTANCE = "cosine_distance"
    EUCLIDEAN = "euclidean"

    @property
    def is_distance(self) -> bool:
        return self is not Metric.COSINE_SIMILARITY


def _pair(u, v) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def cosine_similarity(u, v) -> float:
    a, b = _pair(u, v)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("undefined cosine for a zero vector")
    # Identical vectors are exactly 1 so duplicates never fall below a threshold of 1.
    if np.array_equal(a, b):
        return 1.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def cosine_distance(u, v) -> float:
    return 1.0 - cosine_similarity(u, v)


def euclidean_distance(u, v) -> float:
    a, b = _pair(u, v)
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True)
class DenseIndex:
    """Flat index: chunk ids plus a row-aligned embedding matrix."""

    ids: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("chunk ids must be unique")
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.ids):
            raise ValueError("matrix must have one row per id")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def from_chunks(cls, chunks: Sequence[Chunk]) -> "DenseIndex":
        if not chunks:
            raise ValueError("empty corpus")
        missing = [c.id for c in chunks if c.embedding is None]
        if missing:
            raise ValueError(f"chunks without embeddings: {missing[:5]}")
        dims = {len(c.embedding) for c in chunks}
        if len(dims) != 1:
            raise ValueError(f"mixed embedding dims: {sorted(dims)}")
        matrix = np.array([c.embedding for c in chunks], dtype=np.float64)
        matrix.setflags(write=False)
        return cls(ids=tuple(c.id for c in chunks), matrix=matrix)

    def rows_for(self, restrict_to: Collection[str] | None) -> np.ndarray:
        if restrict_to is None:
            return np.arange(len(self.ids))
        allowed = set(restrict_to)
        return np.array([i for i, cid in enumerate(self.ids) if cid in allowed], dtype=np.intp)


def score_rows(rows: np.ndarray, q: np.ndarray, metric: Metric) -> np.ndarray:
    """Higher-is-better scores of each row of ``rows`` against ``q``."""
    if metric is Metric.EUCLIDEAN:
        return -np.linalg.norm(rows - q, axis=1)
    qn = np.linalg.norm(q)
    rn = np.linalg.norm(rows, axis=1)
    if qn == 0 or np.any(rn == 0):
        raise ValueError("undefined cosine for a zero vector")
    sims = np.clip(rows @ q / (rn * qn), -1.0, 1.0)
    sims[np.all(rows == q, axis=1)] = 1.0
    if metric is Metric.COSINE_DISTANCE:
        return -(1.0 - sims)
    return sims


def dense_top_k(
    index: DenseIndex,
    q,
    k: int,
    metric: Metric | str = Metric.COSINE_SIMILARITY,
    restrict_to: Collection[str] | None = None,
    stats: MutableMapping[str, int] | None = None,
) -> list[RetrievalResult]:
    """Exhaustive top-``k`` scan; the pool is filtered by ``restrict_to`` before scoring.

    When ``stats`` is given, ``stats["metric_evaluations"]`` is incremented by
    the number of vectors actually scored.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    metric = Metric(metric)
    query = np.asarray(q, dtype=np.float64)
    if query.shape != (index.dim,):
        raise ValueError(f"dimension mismatch: query {query.shape} vs index dim {index.dim}")
    rows = index.rows_for(restrict_to)
    if stats is not None:
        stats["metric_evaluations"] = stats.get("metric_evaluations", 0) + len(rows)
    if len(rows) == 0:
        return []
    scores = score_rows(index.matrix[rows], query, metric)
    return ranked(((index.ids[r], float(s)) for r, s in zip(rows, scores)), origin="dense", k=k)
