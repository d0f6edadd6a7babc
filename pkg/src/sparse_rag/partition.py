"""Splitting a corpus into chunks whose information is unique (sparse) and the rest."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from sparse_rag.chunking import Chunk
from sparse_rag.dense import cosine_similarity

DEFAULT_TAU = 0.80


class Criterion(str, enum.Enum):
    EMBEDDING_SIMILARITY = "embedding_similarity"
    NGRAM_CONTAINMENT = "ngram_containment"

    @classmethod
    def parse(cls, value: "Criterion | str") -> "Criterion":
        aliases = {"embedding": cls.EMBEDDING_SIMILARITY, "ngram": cls.NGRAM_CONTAINMENT}
        if isinstance(value, str) and value in aliases:
            return aliases[value]
        return cls(value)


@dataclass(frozen=True)
class PartitionedCorpus:
    """All chunks with the sparse/rest split; ``is_sparse`` flags mirror ``sparse_ids``."""

    all: tuple[Chunk, ...]
    sparse_ids: frozenset[str]
    rest_ids: frozenset[str]
    tau: float
    criterion: Criterion

    def __post_init__(self):
        ids = {c.id for c in self.all}
        if self.sparse_ids | self.rest_ids != ids or self.sparse_ids & self.rest_ids:
            raise ValueError("sparse and rest ids must partition the corpus")
        for c in self.all:
            if c.is_sparse != (c.id in self.sparse_ids):
                raise ValueError(f"is_sparse flag of {c.id!r} disagrees with the partition")

    @property
    def sparse(self) -> list[Chunk]:
        return [c for c in self.all if c.is_sparse]

    @property
    def rest(self) -> list[Chunk]:
        return [c for c in self.all if not c.is_sparse]

    def by_id(self) -> dict[str, Chunk]:
        return {c.id: c for c in self.all}


def _find(corpus: Sequence[Chunk], target: str) -> Chunk:
    for c in corpus:
        if c.id == target:
            return c
    raise KeyError(f"unknown chunk id {target!r}")


def max_neighbor_similarity(corpus: Sequence[Chunk], target: str) -> float:
    """Highest cosine similarity between ``target`` and any other chunk; -1.0 when there is none."""
    chunk = _find(corpus, target)
    best = -1.0
    for other in corpus:
        if other.id != target:
            best = max(best, cosine_similarity(chunk.embedding, other.embedding))
    return best


def _grams(tokens: list[str], n: int) -> set[tuple[str, ...]]:
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def containment(target: Chunk, other: Chunk) -> float:
    """Fraction of the target's word trigrams (unigrams below 3 tokens) also present in ``other``."""
    tokens = target.text.lower().split()
    n = 3 if len(tokens) >= 3 else 1
    mine = _grams(tokens, n)
    if not mine:
        return 0.0
    return len(mine & _grams(other.text.lower().split(), n)) / len(mine)


def _check_tau(tau: float) -> None:
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")


def identify_sparse_information(
    target: str,
    corpus: Sequence[Chunk],
    tau: float = DEFAULT_TAU,
    criterion: Criterion | str = Criterion.EMBEDDING_SIMILARITY,
) -> bool:
    """True when no other chunk reaches ``tau`` similarity (or containment) with ``target``."""
    _check_tau(tau)
    criterion = Criterion.parse(criterion)
    if criterion is Criterion.EMBEDDING_SIMILARITY:
        return max_neighbor_similarity(corpus, target) < tau
    chunk = _find(corpus, target)
    for other in corpus:
        if other.id != target and containment(chunk, other) >= tau:
            return False
    return True


def _embedding_neighbor_max(corpus: Sequence[Chunk]) -> np.ndarray:
    matrix = np.array([c.embedding for c in corpus], dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0):
        raise ValueError("undefined cosine for a zero vector")
    unit = matrix / norms[:, None]
    sims = np.clip(unit @ unit.T, -1.0, 1.0)
    np.fill_diagonal(sims, -np.inf)
    best = sims.max(axis=1) if len(corpus) > 1 else np.full(len(corpus), -1.0)
    # Exact duplicate vectors score exactly 1, matching cosine_similarity.
    seen: dict[bytes, list[int]] = {}
    for i, row in enumerate(matrix):
        seen.setdefault(row.tobytes(), []).append(i)
    for rows in seen.values():
        if len(rows) > 1:
            best[rows] = 1.0
    return best


def _ngram_sparse(corpus: Sequence[Chunk], tau: float) -> list[bool]:
    return [
        all(containment(c, other) < tau for j, other in enumerate(corpus) if j != i)
        for i, c in enumerate(corpus)
    ]


def partition(
    corpus: Sequence[Chunk],
    tau: float = DEFAULT_TAU,
    criterion: Criterion | str = Criterion.EMBEDDING_SIMILARITY,
) -> PartitionedCorpus:
    """Flag every chunk as sparse or not, in one O(n^2) pass over all pairs."""
    if not corpus:
        raise ValueError("empty corpus")
    _check_tau(tau)
    criterion = Criterion.parse(criterion)
    if len({c.id for c in corpus}) != len(corpus):
        raise ValueError("chunk ids must be unique")

    if criterion is Criterion.EMBEDDING_SIMILARITY:
        flags = [bool(m < tau) for m in _embedding_neighbor_max(corpus)]
    else:
        flags = _ngram_sparse(corpus, tau)

    chunks = tuple(replace(c, is_sparse=flag) for c, flag in zip(corpus, flags))
    return PartitionedCorpus(
        all=chunks,
        sparse_ids=frozenset(c.id for c in chunks if c.is_sparse),
        rest_ids=frozenset(c.id for c in chunks if not c.is_sparse),
        tau=tau,
        criterion=criterion,
    )
