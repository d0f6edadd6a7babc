"""Hybrid BM25 + dense retrieval with a sparse-subset distance fallback."""

from sparse_rag.chunking import Chunk, HashingEmbedder, chunk_text, embed_chunks, extract_metadata
from sparse_rag.dense import DenseIndex, Metric, cosine_distance, cosine_similarity, dense_top_k, euclidean_distance
from sparse_rag.lexical import LexicalIndex, bm25_score, bm25_top_k, build_lexical_index
from sparse_rag.partition import Criterion, PartitionedCorpus, identify_sparse_information, partition
from sparse_rag.pipeline import QueryOutcome, RagPipeline, RetrievalResult, answer_query

__all__ = [
    "Chunk",
    "Criterion",
    "DenseIndex",
    "HashingEmbedder",
    "LexicalIndex",
    "Metric",
    "PartitionedCorpus",
    "QueryOutcome",
    "RagPipeline",
    "RetrievalResult",
    "answer_query",
    "bm25_score",
    "bm25_top_k",
    "build_lexical_index",
    "chunk_text",
    "cosine_distance",
    "cosine_similarity",
    "dense_top_k",
    "embed_chunks",
    "euclidean_distance",
    "extract_metadata",
    "identify_sparse_information",
    "partition",
]
