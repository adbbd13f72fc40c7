"""Minimal JSON-over-HTTP retrieval endpoint.

``POST /retrieve`` with ``{"subject", "description", "k"}`` returns the top-k KB
tickets with their solutions; ``GET /health`` reports the model hash. The index
and model are read-only once the server starts, so requests run concurrently.
"""

from __future__ import annotations

import json
import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .corpus import CorpusError, Ticket
from .index import KbIndex, retrieve_topk
from .siamese import SiameseModel

log = logging.getLogger(__name__)

MAX_BODY = 1 << 20


class BadRequest(ValueError):
    pass


def parse_request(body: bytes) -> tuple[Ticket, int]:
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadRequest(f"malformed JSON body: {exc}") from None
    if not isinstance(obj, dict):
        raise BadRequest("request body must be a JSON object")
    subject, description, k = obj.get("subject"), obj.get("description", ""), obj.get("k", 10)
    if not isinstance(subject, str) or not isinstance(description, str):
        raise BadRequest("'subject' and 'description' must be strings")
    if isinstance(k, bool) or not isinstance(k, int):
        raise BadRequest("'k' must be an integer")
    if k <= 0:
        raise BadRequest("'k' must be positive")
    try:
        query = Ticket("query", subject, description)
    except CorpusError as exc:
        raise BadRequest(str(exc)) from None
    return query, k


def handle_retrieve(body: bytes, index: KbIndex, model: SiameseModel) -> dict:
    query, k = parse_request(body)
    return {"results": [r.to_json() for r in retrieve_topk(query, index, model, k)]}


def make_handler(index: KbIndex, model: SiameseModel):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _send(self, status: int, payload: dict) -> None:
            data = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/health":
                self._send(HTTPStatus.OK, {"status": "ok", "model_hash": index.model_hash})
            else:
                self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})

        def do_POST(self):
            length = int(self.headers.get("Content-Length") or 0)
            if length > MAX_BODY:
                self._send(HTTPStatus.REQUEST_ENTITY_TOO_LARGE, {"error": "body too large"})
                return
            body = self.rfile.read(length)
            if self.path != "/retrieve":
                self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})
                return
            try:
                self._send(HTTPStatus.OK, handle_retrieve(body, index, model))
            except BadRequest as exc:
                self._send(HTTPStatus.BAD_REQUEST, {"error": str(exc)})

        def log_message(self, fmt, *args):
            log.debug("%s - %s", self.address_string(), fmt % args)

    return Handler


def make_server(index: KbIndex, model: SiameseModel, host: str = "127.0.0.1",
                port: int = 8080) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), make_handler(index, model))
    server.daemon_threads = True
    return server


def serve(index: KbIndex, model: SiameseModel, host: str = "127.0.0.1", port: int = 8080,
          ready: threading.Event | None = None) -> None:
    """Blocking serve loop; ``ready`` is set once the socket is bound."""
    server = make_server(index, model, host, port)
    log.info("serving on http://%s:%d", *server.server_address[:2])
    if ready is not None:
        ready.set()
    try:
        server.serve_forever()
    finally:
        server.server_close()
