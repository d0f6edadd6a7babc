import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparse_rag.chunking import Chunk, HashingEmbedder, embed_chunks
from sparse_rag.dense import (
    DenseIndex,
    Metric,
    cosine_distance,
    cosine_similarity,
    dense_top_k,
    euclidean_distance,
)


@pytest.mark.parametrize(
    "u, v, sim",
    [((1, 0), (1, 0), 1.0), ((1, 0), (0, 1), 0.0), ((1, 0), (-1, 0), -1.0)],
)
def test_cosine_examples(u, v, sim):
    assert cosine_similarity(u, v) == sim
    assert cosine_distance(u, v) == 1.0 - sim


def test_cosine_errors():
    with pytest.raises(ValueError, match="dimension"):
        cosine_similarity((1, 0), (1, 0, 0))
    with pytest.raises(ValueError, match="undefined cosine"):
        cosine_similarity((0, 0), (1, 0))


def test_euclidean_examples():
    assert euclidean_distance((1, 2), (1, 2)) == 0.0
    assert euclidean_distance((0, 0), (3, 4)) == 5.0
    with pytest.raises(ValueError):
        euclidean_distance((1,), (1, 2))


def test_unit_vector_identity():
    rng = np.random.default_rng(0)
    for _ in range(100):
        u, v = rng.normal(size=(2, 16))
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        assert euclidean_distance(u, v) ** 2 == pytest.approx(2 - 2 * cosine_similarity(u, v), abs=1e-12)


vectors = st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda v: math.hypot(*v) > 1e-3)


@given(vectors, vectors, st.floats(0.01, 100))
def test_cosine_symmetric_and_scale_invariant(u, v, alpha):
    assert cosine_similarity(u, v) == pytest.approx(cosine_similarity(v, u), abs=1e-12)
    assert cosine_similarity([alpha * x for x in u], v) == pytest.approx(cosine_similarity(u, v), abs=1e-12)
    assert -1.0 <= cosine_similarity(u, v) <= 1.0


def index_of(vecs) -> DenseIndex:
    chunks = [Chunk(f"d{i}", "u", "t", (0, 1), embedding=tuple(map(float, v))) for i, v in enumerate(vecs)]
    return DenseIndex.from_chunks(chunks)


def test_pool_of_one_any_metric():
    idx = index_of([(1.0, 2.0)])
    for metric in Metric:
        hits = dense_top_k(idx, (0.5, 0.1), 3, metric)
        assert [h.chunk_id for h in hits] == ["d0"]


def test_empty_restriction():
    idx = index_of([(1.0, 0.0), (0.0, 1.0)])
    assert dense_top_k(idx, (1.0, 0.0), 2, restrict_to=set()) == []


def test_restrict_and_stats():
    idx = index_of([(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    stats = {}
    hits = dense_top_k(idx, (1.0, 0.0), 5, Metric.EUCLIDEAN, restrict_to={"d1", "d2"}, stats=stats)
    assert [h.chunk_id for h in hits] == ["d2", "d1"]
    assert stats == {"metric_evaluations": 2}
    assert hits[0].score == pytest.approx(-1.0)


def test_distance_scores_are_negated():
    idx = index_of([(1.0, 0.0), (0.0, 1.0)])
    hits = dense_top_k(idx, (1.0, 0.0), 2, Metric.COSINE_DISTANCE)
    assert [(h.chunk_id, h.score) for h in hits] == [("d0", 0.0), ("d1", -1.0)]


def test_ties_break_by_id():
    idx = index_of([(0.0, 1.0), (1.0, 0.0), (0.0, 1.0)])
    hits = dense_top_k(idx, (0.0, 1.0), 3)
    assert [h.chunk_id for h in hits] == ["d0", "d2", "d1"]


def test_query_dimension_mismatch():
    with pytest.raises(ValueError):
        dense_top_k(index_of([(1.0, 0.0)]), (1.0, 0.0, 0.0), 1)


def test_five_random_vectors_brute_force():
    rng = np.random.default_rng(5)
    vecs = rng.normal(size=(5, 8))
    q = rng.normal(size=8)
    idx = index_of(vecs)
    sims = [float(np.dot(v, q) / (np.linalg.norm(v) * np.linalg.norm(q))) for v in vecs]
    by_sim = sorted(range(5), key=lambda i: -sims[i])
    by_dist = sorted(range(5), key=lambda i: 1 - sims[i])
    assert by_sim == by_dist
    expected = [f"d{i}" for i in by_sim]
    assert [h.chunk_id for h in dense_top_k(idx, q, 5, Metric.COSINE_SIMILARITY)] == expected
    assert [h.chunk_id for h in dense_top_k(idx, q, 5, Metric.COSINE_DISTANCE)] == expected


def test_euclidean_matches_cosine_on_hashed_embeddings():
    texts = [f"word{i % 7} word{i % 5} token{i % 3} extra{i}" for i in range(30)]
    embedder = HashingEmbedder(64)
    chunks = embed_chunks([Chunk(f"c{i:02d}", "u", t, (0, 4)) for i, t in enumerate(texts)], embedder)
    idx = DenseIndex.from_chunks(chunks)
    q = embedder.embed("word3 token1 word2")
    cos = [h.chunk_id for h in dense_top_k(idx, q, 30, Metric.COSINE_SIMILARITY)]
    euc = [h.chunk_id for h in dense_top_k(idx, q, 30, Metric.EUCLIDEAN)]
    # hashed embeddings produce tied scores, so compare position by position on the score
    assert set(cos) == set(euc)
    for a, b in zip(cos, euc):
        sa = cosine_similarity(idx.matrix[idx.ids.index(a)], q)
        sb = cosine_similarity(idx.matrix[idx.ids.index(b)], q)
        assert sa == pytest.approx(sb, abs=1e-12)


def test_index_validation():
    with pytest.raises(ValueError):
        DenseIndex.from_chunks([])
    with pytest.raises(ValueError):
        DenseIndex.from_chunks([Chunk("a", "u", "t", (0, 1))])
    with pytest.raises(ValueError):
        DenseIndex.from_chunks(
            [Chunk("a", "u", "t", (0, 1), embedding=(1.0,)), Chunk("b", "u", "t", (0, 1), embedding=(1.0, 2.0))]
        )
