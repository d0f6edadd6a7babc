import threading
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest

from sparse_rag.pipeline import ExtractiveGenerator, RagPipeline, RejectInsufficientValidator
from sparse_rag.service import make_server
from synthetic import SPARSE_FACTS, TOPIC_QUERIES, build_indexes


class DownBackend:
    def complete(self, prompt):
        raise ConnectionError("validator unreachable")


def start(pipeline):
    server = make_server(pipeline, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    return server, f"http://{host}:{port}"


@pytest.fixture(scope="module")
def parts():
    return build_indexes()


@pytest.fixture
def service(parts):
    synth, pc, lex, dense = parts
    pipeline = RagPipeline(pc, lex, dense, synth.embedder, ExtractiveGenerator(), RejectInsufficientValidator())
    server, base = start(pipeline)
    with httpx.Client(base_url=base, timeout=10) as client:
        yield client, pc
    server.shutdown()
    server.server_close()


def test_health(service):
    client, _ = service
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


@pytest.mark.parametrize(
    "body",
    [b"not json", b"[1, 2]", b'{"query": ""}', b'{"query": "   "}', b'{"top_k": 3}', b'{"query": 5}',
     b'{"query": "x", "top_k": 0}', b'{"query": "x", "top_k": "3"}', b'{"query": "x", "top_k": true}'],
)
def test_malformed_query_is_400(service, body):
    client, _ = service
    response = client.post("/query", content=body, headers={"Content-Type": "application/json"})
    assert response.status_code == 400
    assert "error" in response.json()


def test_unknown_route(service):
    client, _ = service
    assert client.get("/nope").status_code == 404


def test_sparse_query_takes_distance_path(service):
    client, pc = service
    text, query, answer = SPARSE_FACTS[1]
    response = client.post("/query", json={"query": query})
    assert response.status_code == 200
    body = response.json()
    assert set(body) == {"answer", "path", "chunks", "timings"}
    assert body["path"] == "distance"
    assert answer in body["answer"].lower()
    assert body["chunks"]
    for chunk in body["chunks"]:
        assert set(chunk) == {"id", "source_uri", "score"}
        assert chunk["id"] in pc.sparse_ids
        assert isinstance(chunk["score"], float)
    assert all(isinstance(v, float) for v in body["timings"].values())


def test_top_k_in_request(service):
    client, _ = service
    body = client.post("/query", json={"query": TOPIC_QUERIES[0][0], "top_k": 2}).json()
    assert body["path"] == "hybrid"
    assert len(body["chunks"]) == 2


def test_concurrent_identical_queries(service):
    client, _ = service
    queries = [SPARSE_FACTS[0][1], TOPIC_QUERIES[3][0]] * 8

    def ask(q):
        body = client.post("/query", json={"query": q}).json()
        return q, body["answer"], body["path"], [c["id"] for c in body["chunks"]]

    with ThreadPoolExecutor(max_workers=8) as pool:
        answers = list(pool.map(ask, queries))
    by_query = {}
    for q, *rest in answers:
        by_query.setdefault(q, set()).add(repr(rest))
    assert all(len(v) == 1 for v in by_query.values())


def test_backend_failure_is_502(parts):
    synth, pc, lex, dense = parts
    pipeline = RagPipeline(pc, lex, dense, synth.embedder, ExtractiveGenerator(), DownBackend())
    server, base = start(pipeline)
    try:
        response = httpx.post(base + "/query", json={"query": "incubator"}, timeout=10)
        assert response.status_code == 502
        assert response.json()["stage"] == "validate"
    finally:
        server.shutdown()
        server.server_close()
