"""HTTP query service.

Endpoints:

* ``GET /health`` -> ``{"status": "ok"}``
* ``POST /query`` with ``{"query": str, "top_k": int?}`` -> ``{"answer", "path",
  "chunks": [{"id", "source_uri", "score"}], "timings"}``

Malformed requests get 400; a failing generator/validator backend gets 502
with the failing stage in the body.
"""

from __future__ import annotations

import json
import logging
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from sparse_rag.pipeline import PipelineError, QueryOutcome, RagPipeline

logger = logging.getLogger(__name__)

MAX_BODY = 1 << 20


def outcome_payload(outcome: QueryOutcome, pipeline: RagPipeline) -> dict:
    chunks = pipeline.corpus.by_id()
    return {
        "answer": outcome.answer,
        "path": outcome.path,
        "chunks": [
            {"id": r.chunk_id, "source_uri": chunks[r.chunk_id].source_uri, "score": r.score}
            for r in outcome.supporting
        ],
        "timings": outcome.timings,
    }


class BadRequest(ValueError):
    pass


def parse_query_body(raw: bytes) -> tuple[str, int | None]:
    try:
        body = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadRequest(f"body is not valid JSON: {exc}") from None
    if not isinstance(body, dict):
        raise BadRequest("body must be a JSON object")
    query = body.get("query")
    if not isinstance(query, str) or not query.strip():
        raise BadRequest("'query' must be a non-empty string")
    top_k = body.get("top_k")
    if top_k is not None and (isinstance(top_k, bool) or not isinstance(top_k, int) or top_k < 1):
        raise BadRequest("'top_k' must be a positive integer")
    return query, top_k


def make_handler(pipeline: RagPipeline) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        server_version = "sparse-rag/0.1"

        def _send(self, status: int, payload: dict) -> None:
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, fmt, *args):
            logger.info("%s - %s", self.address_string(), fmt % args)

        def do_GET(self):
            if self.path == "/health":
                self._send(HTTPStatus.OK, {"status": "ok"})
            else:
                self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})

        def do_POST(self):
            if self.path != "/query":
                self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
            except ValueError:
                length = -1
            if not 0 <= length <= MAX_BODY:
                self._send(HTTPStatus.BAD_REQUEST, {"error": "invalid Content-Length"})
                return
            try:
                query, top_k = parse_query_body(self.rfile.read(length))
            except BadRequest as exc:
                self._send(HTTPStatus.BAD_REQUEST, {"error": str(exc)})
                return
            try:
                outcome = pipeline.answer(query, top_k=top_k)
            except PipelineError as exc:
                logger.warning("backend failure: %s", exc)
                self._send(HTTPStatus.BAD_GATEWAY, {"error": str(exc), "stage": exc.stage})
                return
            self._send(HTTPStatus.OK, outcome_payload(outcome, pipeline))

    return Handler


def make_server(pipeline: RagPipeline, host: str = "127.0.0.1", port: int = 8000) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), make_handler(pipeline))
    server.daemon_threads = True
    return server


def serve(pipeline: RagPipeline, host: str = "127.0.0.1", port: int = 8000) -> None:
    server = make_server(pipeline, host, port)
    logger.info("listening on http://%s:%d", *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
