"""Chunking clean text and attaching embeddings and metadata."""

from __future__ import annotations

import hashlib
import os
import string
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import httpx
import numpy as np

from sparse_rag.ingest import CleanDocument

DEFAULT_CHUNK_SIZE = 256
DEFAULT_OVERLAP = 32


@dataclass(frozen=True)
class Chunk:
    """A contiguous window of a source document's whitespace tokens.

    ``embedding`` is stored as a tuple of floats so chunks compare and
    serialize exactly; use ``np.asarray(chunk.embedding)`` for arithmetic.
    """

    id: str
    source_uri: str
    text: str
    token_span: tuple[int, int]
    embedding: tuple[float, ...] | None = None
    metadata: dict[str, str] = field(default_factory=dict)
    is_sparse: bool = False

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"chunk {self.id!r} has empty text")
        start, end = self.token_span
        if not start < end:
            raise ValueError(f"chunk {self.id!r} has invalid token span {self.token_span}")

    @property
    def dim(self) -> int | None:
        return None if self.embedding is None else len(self.embedding)


class EmbeddingProvider(Protocol):
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class EmbeddingError(RuntimeError):
    def __init__(self, chunk_ids: Sequence[str], reason: str):
        super().__init__(f"embedding failed for chunks {list(chunk_ids)}: {reason}")
        self.chunk_ids = list(chunk_ids)


def tokenize(text: str) -> list[str]:
    return text.split()


def _uri_key(source_uri: str) -> str:
    return hashlib.sha1(source_uri.encode("utf-8")).hexdigest()[:12]


def chunk_text(doc: CleanDocument, chunk_size: int = DEFAULT_CHUNK_SIZE, overlap: int = DEFAULT_OVERLAP) -> list[Chunk]:
    """Split ``doc.body`` into overlapping windows of whitespace tokens.

    Windows start every ``chunk_size - overlap`` tokens; the last one may be
    shorter and ends exactly at the final token.
    """
    if chunk_size <= 0:
        raise ValueError("chunk_size must be positive")
    if not 0 <= overlap < chunk_size:
        raise ValueError("overlap must satisfy 0 <= overlap < chunk_size")

    tokens = tokenize(doc.body)
    n = len(tokens)
    stride = chunk_size - overlap
    key = _uri_key(doc.source_uri)
    chunks = []
    start = 0
    while start < n:
        end = min(start + chunk_size, n)
        chunks.append(
            Chunk(
                id=f"{key}-{start:07d}",
                source_uri=doc.source_uri,
                text=" ".join(tokens[start:end]),
                token_span=(start, end),
            )
        )
        if end == n:
            break
        start += stride
    return chunks


class HashingEmbedder:
    """Deterministic hashed bag-of-words embeddings.

    Each lowercased token is hashed (keyed BLAKE2b, so results do not depend on
    ``PYTHONHASHSEED``) into one of ``dim`` buckets; bucket counts are then
    L2-normalized. Texts sharing vocabulary get higher cosine similarity.
    """

    def __init__(self, dim: int = 256, seed: int = 0):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self._key = seed.to_bytes(8, "little", signed=True)

    def bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=self._key).digest()
        return int.from_bytes(digest, "little") % self.dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokenize(text):
            vec[self.bucket(token.lower())] += 1.0
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


class RemoteEmbedder:
    """Embedding provider backed by an HTTP endpoint.

    The endpoint receives ``{"texts": [...]}`` and must answer
    ``{"embeddings": [[...], ...]}`` with one vector per text.
    """

    def __init__(self, endpoint: str, dim: int, api_key_env: str | None = None, timeout: float = 30.0,
                 client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.dim = dim
        self.api_key_env = api_key_env
        self.timeout = timeout
        self._client = client

    def _headers(self) -> dict[str, str]:
        if self.api_key_env and os.environ.get(self.api_key_env):
            return {"Authorization": f"Bearer {os.environ[self.api_key_env]}"}
        return {}

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        payload = {"texts": list(texts)}
        if self._client is not None:
            response = self._client.post(self.endpoint, json=payload, headers=self._headers())
        else:
            response = httpx.post(self.endpoint, json=payload, headers=self._headers(), timeout=self.timeout)
        response.raise_for_status()
        vectors = response.json()["embeddings"]
        if len(vectors) != len(texts):
            raise ValueError(f"expected {len(texts)} embeddings, got {len(vectors)}")
        out = [np.asarray(v, dtype=np.float64) for v in vectors]
        for v in out:
            if v.shape != (self.dim,):
                raise ValueError(f"expected dim {self.dim}, got shape {v.shape}")
        return out


def embed_chunks(chunks: Sequence[Chunk], provider: EmbeddingProvider, batch_size: int = 64) -> list[Chunk]:
    """Return copies of ``chunks`` carrying embeddings from ``provider``.

    Any failing batch aborts the whole call with :class:`EmbeddingError`
    naming the chunk ids of that batch.
    """
    if provider.dim <= 0:
        raise ValueError("provider dim must be positive")
    out: list[Chunk] = []
    for i in range(0, len(chunks), batch_size):
        batch = chunks[i : i + batch_size]
        ids = [c.id for c in batch]
        try:
            vectors = provider.embed_batch([c.text for c in batch])
            if len(vectors) != len(batch):
                raise ValueError(f"provider returned {len(vectors)} vectors for {len(batch)} texts")
            converted = []
            for v in vectors:
                arr = np.asarray(v, dtype=np.float64)
                if arr.shape != (provider.dim,) or not np.all(np.isfinite(arr)):
                    raise ValueError(f"bad embedding of shape {arr.shape}")
                converted.append(tuple(float(x) for x in arr))
        except Exception as exc:
            raise EmbeddingError(ids, str(exc)) from exc
        out.extend(replace(c, embedding=e) for c, e in zip(batch, converted))
    return out


def _capitalized(token: str) -> str | None:
    word = token.strip(string.punctuation)
    if word and word[0].isupper():
        return word
    return None


def extract_metadata(chunk: Chunk) -> dict[str, str]:
    """Default entity heuristic: maximal runs of capitalized tokens.

    A run ends at any token that does not start with an uppercase letter, and
    also after a token carrying trailing sentence punctuation.
    """
    runs: list[str] = []
    current: list[str] = []
    for token in tokenize(chunk.text):
        word = _capitalized(token)
        if word is None:
            if current:
                runs.append(" ".join(current))
                current = []
            continue
        current.append(word)
        if token.rstrip()[-1] in ".!?,;:":
            runs.append(" ".join(current))
            current = []
    if current:
        runs.append(" ".join(current))
    return {"entities": ", ".join(runs)}


def with_metadata(chunks: Sequence[Chunk], extractor=extract_metadata) -> list[Chunk]:
    return [replace(c, metadata={**c.metadata, **extractor(c)}) for c in chunks]
