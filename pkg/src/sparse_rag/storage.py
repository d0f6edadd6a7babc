"""Index file persistence.

The index file is one JSON document::

    {
      "format_version": 1,
      "config": {...},                       # EngineConfig snapshot
      "partition": {"tau": 0.8, "criterion": "embedding_similarity"} | null,
      "chunks": [{"id", "source_uri", "text", "token_span": [s, e],
                  "embedding": [...], "metadata": {...}, "is_sparse"}, ...]
    }

Floats are written with ``repr`` precision, so embeddings round-trip exactly.
The BM25 and dense indexes are rebuilt from the chunks on load.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from sparse_rag.chunking import Chunk
from sparse_rag.config import EngineConfig
from sparse_rag.dense import DenseIndex
from sparse_rag.lexical import LexicalIndex, build_lexical_index
from sparse_rag.partition import Criterion, PartitionedCorpus

FORMAT_VERSION = 1


class IndexFormatError(ValueError):
    pass


@dataclass
class LoadedIndex:
    chunks: list[Chunk]
    config: EngineConfig
    corpus: PartitionedCorpus | None
    lexical: LexicalIndex
    dense: DenseIndex


def chunk_to_dict(chunk: Chunk) -> dict:
    return {
        "id": chunk.id,
        "source_uri": chunk.source_uri,
        "text": chunk.text,
        "token_span": list(chunk.token_span),
        "embedding": None if chunk.embedding is None else list(chunk.embedding),
        "metadata": dict(chunk.metadata),
        "is_sparse": chunk.is_sparse,
    }


def chunk_from_dict(data: dict) -> Chunk:
    embedding = data["embedding"]
    return Chunk(
        id=data["id"],
        source_uri=data["source_uri"],
        text=data["text"],
        token_span=(int(data["token_span"][0]), int(data["token_span"][1])),
        embedding=None if embedding is None else tuple(float(x) for x in embedding),
        metadata={str(k): str(v) for k, v in data["metadata"].items()},
        is_sparse=bool(data["is_sparse"]),
    )


def save_index(
    path: str | Path,
    chunks: Sequence[Chunk] | PartitionedCorpus,
    config: EngineConfig | None = None,
) -> None:
    """Write chunks (or a partitioned corpus, keeping its tau and criterion) atomically."""
    partition = None
    if isinstance(chunks, PartitionedCorpus):
        partition = {"tau": chunks.tau, "criterion": chunks.criterion.value}
        chunks = list(chunks.all)
    doc = {
        "format_version": FORMAT_VERSION,
        "config": (config or EngineConfig()).to_dict(),
        "partition": partition,
        "chunks": [chunk_to_dict(c) for c in chunks],
    }
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False)
        os.replace(tmp, target)
    except BaseException:
        os.unlink(tmp)
        raise


def _parse(raw: bytes) -> dict:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IndexFormatError(f"index file is not UTF-8 (byte offset {exc.start})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise IndexFormatError(f"corrupt index file: {exc.msg} at byte offset {offset}") from exc


def load_index(path: str | Path) -> LoadedIndex:
    doc = _parse(Path(path).read_bytes())
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise IndexFormatError("not an index file: missing format_version")
    version = doc["format_version"]
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index format_version {version}; this build reads {FORMAT_VERSION}")
    try:
        config = EngineConfig.from_dict(doc["config"])
        chunks = [chunk_from_dict(c) for c in doc["chunks"]]
        partition = doc.get("partition")
    except (KeyError, TypeError, ValueError) as exc:
        raise IndexFormatError(f"malformed index file: {exc}") from exc

    corpus = None
    if partition is not None:
        sparse = frozenset(c.id for c in chunks if c.is_sparse)
        corpus = PartitionedCorpus(
            all=tuple(chunks),
            sparse_ids=sparse,
            rest_ids=frozenset(c.id for c in chunks) - sparse,
            tau=float(partition["tau"]),
            criterion=Criterion.parse(partition["criterion"]),
        )
    return LoadedIndex(
        chunks=chunks,
        config=config,
        corpus=corpus,
        lexical=build_lexical_index(chunks, k1=config.k1, b=config.b),
        dense=DenseIndex.from_chunks(chunks),
    )
