"""Okapi BM25 over an inverted index of chunk tokens."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Collection, Sequence

from sparse_rag.chunking import Chunk
from sparse_rag.results import RetrievalResult, ranked

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


def analyze(text: str) -> list[str]:
    return text.lower().split()


@dataclass(frozen=True)
class LexicalIndex:
    postings: dict[str, list[tuple[str, int]]]
    doc_lengths: dict[str, int]
    avgdl: float
    N: int
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    def idf(self, term: str) -> float:
        n = len(self.postings.get(term, ()))
        return math.log((self.N - n + 0.5) / (n + 0.5) + 1.0)

    def term_frequency(self, term: str, chunk_id: str) -> int:
        for cid, tf in self.postings.get(term, ()):
            if cid == chunk_id:
                return tf
        return 0


def build_lexical_index(chunks: Sequence[Chunk], k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> LexicalIndex:
    if not chunks:
        raise ValueError("empty corpus")
    if k1 <= 0:
        raise ValueError("k1 must be positive")
    if not 0.0 <= b <= 1.0:
        raise ValueError("b must lie in [0, 1]")

    postings: dict[str, list[tuple[str, int]]] = defaultdict(list)
    doc_lengths: dict[str, int] = {}
    for chunk in chunks:
        if chunk.id in doc_lengths:
            raise ValueError(f"duplicate chunk id {chunk.id!r}")
        terms = analyze(chunk.text)
        doc_lengths[chunk.id] = len(terms)
        for term, tf in Counter(terms).items():
            postings[term].append((chunk.id, tf))
    for plist in postings.values():
        plist.sort()

    n = len(doc_lengths)
    return LexicalIndex(
        postings=dict(postings),
        doc_lengths=doc_lengths,
        avgdl=sum(doc_lengths.values()) / n,
        N=n,
        k1=k1,
        b=b,
    )


def _term_weight(index: LexicalIndex, tf: int, doc_len: int, idf: float) -> float:
    norm = index.k1 * (1.0 - index.b + index.b * doc_len / index.avgdl)
    return idf * tf * (index.k1 + 1.0) / (tf + norm)


def bm25_score(index: LexicalIndex, query: str, chunk_id: str) -> float:
    """BM25 score of one chunk. Repeated query terms count once per occurrence."""
    if chunk_id not in index.doc_lengths:
        raise KeyError(f"unknown chunk id {chunk_id!r}")
    doc_len = index.doc_lengths[chunk_id]
    score = 0.0
    for term in analyze(query):
        tf = index.term_frequency(term, chunk_id)
        if tf:
            score += _term_weight(index, tf, doc_len, index.idf(term))
    return score


def bm25_top_k(
    index: LexicalIndex,
    query: str,
    k: int,
    restrict_to: Collection[str] | None = None,
) -> list[RetrievalResult]:
    """Top ``k`` chunks with a positive BM25 score, best first, ties by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    allowed = None if restrict_to is None else set(restrict_to)
    scores: dict[str, float] = defaultdict(float)
    for term in analyze(query):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        for cid, tf in plist:
            if allowed is not None and cid not in allowed:
                continue
            scores[cid] += _term_weight(index, tf, index.doc_lengths[cid], idf)
    return ranked(((cid, s) for cid, s in scores.items() if s > 0), origin="bm25", k=k)
