"""Query answering: hybrid retrieval over R, validation, and the distance fallback over S."""

from __future__ import annotations

import os
import re
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Literal, Protocol, Sequence

import httpx
import numpy as np

from sparse_rag.chunking import Chunk, EmbeddingProvider
from sparse_rag.dense import DenseIndex, Metric, dense_top_k
from sparse_rag.lexical import LexicalIndex, bm25_top_k
from sparse_rag.partition import PartitionedCorpus
from sparse_rag.results import RetrievalResult, ranked

__all__ = [
    "INSUFFICIENT_CONTEXT",
    "VALIDATION_PROMPT",
    "ExtractiveGenerator",
    "Generator",
    "LLMGenerator",
    "LexicalOverlapReranker",
    "PipelineConfig",
    "PipelineError",
    "Query",
    "QueryOutcome",
    "RagPipeline",
    "RejectInsufficientValidator",
    "RemoteLLM",
    "RetrievalResult",
    "ValidationResult",
    "answer_query",
    "default_rerank",
    "fuse",
    "render_validation_prompt",
    "reorder_long_context",
    "validate",
]

VALIDATION_PROMPT = (
    "You are an intelligent bot designed to assist users on an organization's website by answering "
    "their queries. You'll be given a user's question and an associated answer. Your task is to "
    "determine if the provided answer effectively resolves the query. If the answer is "
    "unsatisfactory, return 0.\nQuery:  {query}\nAnswer: {answer}\nYour Feedback:"
)

GENERATION_SYSTEM = (
    "Answer the user's question using only the context below. "
    "If the context does not contain the answer, say so."
)

INSUFFICIENT_CONTEXT = "INSUFFICIENT CONTEXT"

AnswerPath = Literal["hybrid", "distance", "hybrid_unvalidated"]

_WORD = re.compile(r"\w+")
_SENTENCE_END = re.compile(r"[.?!]+")


class PipelineError(RuntimeError):
    """A backend call failed; ``stage`` names the pipeline step."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


class Generator(Protocol):
    def generate(self, query: str, context: Sequence[str]) -> str: ...


class Completion(Protocol):
    """Anything that maps a prompt to text; validators implement this."""

    def complete(self, prompt: str) -> str: ...


class Reranker(Protocol):
    def rerank(self, query: str, chunks: Sequence[Chunk]) -> list[RetrievalResult]: ...


@dataclass(frozen=True)
class ValidationResult:
    satisfactory: bool
    raw_feedback: str


@dataclass(frozen=True)
class Query:
    text: str
    embedding: np.ndarray
    top_k: int = 5

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("query text must be non-empty")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass
class QueryOutcome:
    answer: str
    path: AnswerPath
    supporting: list[RetrievalResult]
    validation: ValidationResult
    timings: dict[str, float] = field(default_factory=dict)
    initial_answer: str = ""
    generation_calls: int = 0
    validator_calls: int = 0
    metric_evaluations: int = 0


@dataclass(frozen=True)
class PipelineConfig:
    top_k: int = 5
    distance_top_k: int = 5
    bm25_weight: float = 0.5
    dense_weight: float = 0.5
    rrf_k: float = 60.0
    fallback_metric: Metric = Metric.EUCLIDEAN
    fallback_enabled: bool = True


def words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_END.split(text) if s.strip()]


def fuse(rankings: Sequence[tuple[Sequence[RetrievalResult], float]], rrf_k: float = 60.0) -> list[RetrievalResult]:
    """Weighted reciprocal-rank fusion: each list adds ``weight / (rrf_k + rank)``."""
    if rrf_k <= 0:
        raise ValueError("rrf_k must be positive")
    weights = [w for _, w in rankings]
    if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
        raise ValueError("weights must be non-negative and not all zero")
    scores: dict[str, float] = defaultdict(float)
    for results, weight in rankings:
        for r in results:
            scores[r.chunk_id] += weight / (rrf_k + r.rank)
    return ranked(scores.items(), origin="fused")


def reorder_long_context(results: Sequence[RetrievalResult]) -> list[RetrievalResult]:
    """Put the best results at both ends of the context and the weakest in the middle.

    Input is best-first. Items at odd positions (1st, 3rd, ...) fill the front
    in order; even positions fill the back in reverse. Ranks are kept so the
    original retrieval order stays recoverable.
    """
    items = list(results)
    return items[0::2] + items[1::2][::-1]


def default_rerank(query: str, chunks: Sequence[Chunk]) -> list[RetrievalResult]:
    """Rank chunks by the fraction of distinct query words they contain."""
    q = set(words(query))
    if not q:
        return ranked(((c.id, 0.0) for c in chunks), origin="reranked")
    return ranked(((c.id, len(q & set(words(c.text))) / len(q)) for c in chunks), origin="reranked")


class LexicalOverlapReranker:
    def rerank(self, query: str, chunks: Sequence[Chunk]) -> list[RetrievalResult]:
        return default_rerank(query, chunks)


def render_validation_prompt(query: str, answer: str) -> str:
    return VALIDATION_PROMPT.format(query=query, answer=answer)


def validate(query: str, answer: str, validator: Completion) -> ValidationResult:
    """Ask ``validator`` whether ``answer`` resolves ``query``; only a bare ``0`` means no."""
    try:
        feedback = validator.complete(render_validation_prompt(query, answer))
    except Exception as exc:
        raise PipelineError("validate", exc) from exc
    return ValidationResult(satisfactory=feedback.strip() != "0", raw_feedback=feedback)


class ExtractiveGenerator:
    """Deterministic generator returning the context sentence sharing the most words with the query.

    Ties keep the earliest sentence. With no shared word at all the answer is
    :data:`INSUFFICIENT_CONTEXT`.
    """

    def generate(self, query: str, context: Sequence[str]) -> str:
        q = set(words(query))
        best, best_overlap = INSUFFICIENT_CONTEXT, 0
        for text in context:
            for sentence in split_sentences(text):
                overlap = len(q & set(words(sentence)))
                if overlap > best_overlap:
                    best, best_overlap = sentence, overlap
        return best


class RejectInsufficientValidator:
    """Test validator: answers ``0`` exactly when the rendered answer is the insufficient-context marker."""

    def complete(self, prompt: str) -> str:
        answer = prompt.split("\nAnswer: ", 1)[-1].rsplit("\nYour Feedback:", 1)[0]
        return "0" if answer.strip() == INSUFFICIENT_CONTEXT else "1"


class RemoteLLM:
    """Text completion over HTTP: POST ``{"prompt": ...}``, expect ``{"text": ...}``."""

    def __init__(self, endpoint: str, api_key_env: str | None = None, timeout: float = 60.0,
                 client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.timeout = timeout
        self._client = client

    def complete(self, prompt: str) -> str:
        headers = {}
        if self.api_key_env and os.environ.get(self.api_key_env):
            headers["Authorization"] = f"Bearer {os.environ[self.api_key_env]}"
        if self._client is not None:
            response = self._client.post(self.endpoint, json={"prompt": prompt}, headers=headers)
        else:
            response = httpx.post(self.endpoint, json={"prompt": prompt}, headers=headers, timeout=self.timeout)
        response.raise_for_status()
        return str(response.json()["text"])


def render_generation_prompt(query: str, context: Sequence[str], system: str = GENERATION_SYSTEM) -> str:
    return f"{system}\n\nContext:\n" + "\n\n".join(context) + f"\n\nQuestion: {query}\nAnswer:"


class LLMGenerator:
    def __init__(self, llm: Completion, system: str = GENERATION_SYSTEM):
        self.llm = llm
        self.system = system

    def generate(self, query: str, context: Sequence[str]) -> str:
        return self.llm.complete(render_generation_prompt(query, context, self.system))


class RagPipeline:
    """Answers queries over a partitioned corpus.

    Hybrid (BM25 + cosine, fused and reordered) retrieval runs over the rest
    subset first. If the validator rejects that answer, distance-metric
    retrieval over the sparse subset, followed by reranking, produces the
    final answer. Indexes are read-only; one instance can serve concurrent
    queries provided the backends are thread-safe.
    """

    def __init__(
        self,
        corpus: PartitionedCorpus,
        lexical: LexicalIndex,
        dense: DenseIndex,
        embedder: EmbeddingProvider,
        generator: Generator,
        validator: Completion,
        reranker: Reranker | None = None,
        config: PipelineConfig | None = None,
    ):
        if not corpus.all:
            raise ValueError("empty corpus")
        self.corpus = corpus
        self.lexical = lexical
        self.dense = dense
        self.embedder = embedder
        self.generator = generator
        self.validator = validator
        self.reranker = reranker or LexicalOverlapReranker()
        self.config = config or PipelineConfig()
        self._chunks = corpus.by_id()

    def make_query(self, text: str, top_k: int | None = None) -> Query:
        if not text.strip():
            raise ValueError("query text must be non-empty")
        try:
            (embedding,) = self.embedder.embed_batch([text])
        except Exception as exc:
            raise PipelineError("embed_query", exc) from exc
        return Query(text=text, embedding=np.asarray(embedding, dtype=np.float64), top_k=top_k or self.config.top_k)

    def texts(self, results: Sequence[RetrievalResult]) -> list[str]:
        return [self._chunks[r.chunk_id].text for r in results]

    def retrieve_hybrid(self, q: Query) -> list[RetrievalResult]:
        pool = self.corpus.rest_ids
        if not pool:
            return []
        lexical = bm25_top_k(self.lexical, q.text, q.top_k, restrict_to=pool)
        dense = dense_top_k(self.dense, q.embedding, q.top_k, Metric.COSINE_SIMILARITY, restrict_to=pool)
        fused = fuse([(lexical, self.config.bm25_weight), (dense, self.config.dense_weight)], self.config.rrf_k)
        return reorder_long_context(fused[: q.top_k])

    def retrieve_distance(self, q: Query, stats: dict[str, int]) -> list[RetrievalResult]:
        pool = self.corpus.sparse_ids
        candidates = dense_top_k(
            self.dense,
            q.embedding,
            self.config.distance_top_k,
            self.config.fallback_metric,
            restrict_to=pool,
            stats=stats,
        )
        return self.reranker.rerank(q.text, [self._chunks[r.chunk_id] for r in candidates])

    def _generate(self, q: Query, results: Sequence[RetrievalResult], stage: str) -> str:
        try:
            return self.generator.generate(q.text, self.texts(results))
        except Exception as exc:
            raise PipelineError(stage, exc) from exc

    def answer(self, text: str, top_k: int | None = None) -> QueryOutcome:
        timings: dict[str, float] = {}
        t0 = time.perf_counter()
        q = self.make_query(text, top_k)
        timings["embed_query"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        chunks_r = self.retrieve_hybrid(q)
        timings["retrieve_hybrid"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        initial = self._generate(q, chunks_r, "generate_initial")
        timings["generate_initial"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        verdict = validate(q.text, initial, self.validator)
        timings["validate"] = time.perf_counter() - t0

        outcome = QueryOutcome(
            answer=initial,
            path="hybrid",
            supporting=chunks_r,
            validation=verdict,
            timings=timings,
            initial_answer=initial,
            generation_calls=1,
            validator_calls=1,
        )
        if verdict.satisfactory:
            return outcome
        if not self.config.fallback_enabled or not self.corpus.sparse_ids:
            outcome.path = "hybrid_unvalidated"
            return outcome

        stats: dict[str, int] = {}
        t0 = time.perf_counter()
        chunks_s = self.retrieve_distance(q, stats)
        timings["retrieve_distance"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        final = self._generate(q, chunks_s, "generate_final")
        timings["generate_final"] = time.perf_counter() - t0

        outcome.answer = final
        outcome.path = "distance"
        outcome.supporting = chunks_s
        outcome.generation_calls = 2
        outcome.metric_evaluations = stats.get("metric_evaluations", 0)
        return outcome


def answer_query(
    q: str,
    pc: PartitionedCorpus,
    lex: LexicalIndex,
    dense: DenseIndex,
    embedder: EmbeddingProvider,
    gen: Generator,
    validator: Completion,
    reranker: Reranker | None = None,
    config: PipelineConfig | None = None,
) -> QueryOutcome:
    """One-shot form of :meth:`RagPipeline.answer`."""
    return RagPipeline(pc, lex, dense, embedder, gen, validator, reranker, config).answer(q)
