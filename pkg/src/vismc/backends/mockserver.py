"""Mock detector server speaking the wire protocol, backed by scene documents.

Faults can be injected for client testing: each incoming request pops the
next entry of ``faults`` (``"drop"``, ``"delay:<ms>"``, ``"malformed"``,
``"http500"``) before being served normally.
"""

from __future__ import annotations

import collections
import json
import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Iterable, Mapping

from ..errors import MalformedInput, UnknownImage
from .oracle import OracleBackend
from .scene import SceneDocument
from .wire import (
    BAD_REQUEST, HTTP_STATUS, MODEL_FAILURE, PATH, UNKNOWN_IMAGE,
    DetectorWireRequest, DetectorWireResponse, error_payload,
)

logger = logging.getLogger(__name__)

MODEL_NAME = "scene-oracle/1"


def handle_request(oracle: OracleBackend, payload: bytes) -> tuple[int, dict]:
    """Serve one request body; returns (HTTP status, response document)."""
    start = time.perf_counter()
    try:
        req = DetectorWireRequest.from_dict(json.loads(payload))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        return HTTP_STATUS[BAD_REQUEST], error_payload(BAD_REQUEST, f"invalid JSON: {e}")
    except MalformedInput as e:
        return HTTP_STATUS[BAD_REQUEST], error_payload(BAD_REQUEST, str(e))
    try:
        if req.task == "detect":
            results = tuple(
                tuple(b for b in oracle.detect(req.image_id, q) if b.score >= req.threshold)
                for q in req.queries
            )
            texts: tuple[str, ...] = ()
        else:
            oracle.scene(req.image_id)
            results = ()
            texts = tuple(oracle.read_text(req.image_id, req.region))
    except UnknownImage:
        return HTTP_STATUS[UNKNOWN_IMAGE], error_payload(UNKNOWN_IMAGE, f"unknown image {req.image_id}")
    except Exception as e:  # pragma: no cover - defensive
        logger.exception("model failure")
        return HTTP_STATUS[MODEL_FAILURE], error_payload(MODEL_FAILURE, str(e))
    latency = int((time.perf_counter() - start) * 1000)
    return 200, DetectorWireResponse(results, texts, MODEL_NAME, latency).to_dict()


class MockDetectorServer:
    """Threaded HTTP server; use as a context manager or call start/stop."""

    def __init__(self, corpus: Mapping[str, SceneDocument], host: str = "127.0.0.1", port: int = 0,
                 faults: Iterable[str] = ()):
        self.oracle = OracleBackend(corpus)
        self.faults = collections.deque(faults)
        self.requests_seen = 0
        self._lock = threading.Lock()
        self._httpd = ThreadingHTTPServer((host, port), self._handler())
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def add_faults(self, faults: Iterable[str]) -> None:
        with self._lock:
            self.faults.extend(faults)

    def _next_fault(self) -> str | None:
        with self._lock:
            self.requests_seen += 1
            return self.faults.popleft() if self.faults else None

    def _handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):
                logger.debug("mock-server: " + fmt, *args)

            def _send(self, status: int, body: bytes):
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = self.rfile.read(length)
                if self.path != PATH:
                    self._send(404, json.dumps(error_payload(BAD_REQUEST, f"unknown path {self.path}")).encode())
                    return
                fault = server._next_fault()
                if fault == "drop":
                    self.close_connection = True
                    self.connection.close()
                    return
                if fault and fault.startswith("delay:"):
                    time.sleep(int(fault.split(":", 1)[1]) / 1000)
                if fault == "malformed":
                    self._send(200, b'{"results": [[{"x0": 0.1,')
                    return
                if fault == "http500":
                    self._send(500, b"internal error")
                    return
                status, doc = handle_request(server.oracle, payload)
                self._send(status, json.dumps(doc).encode())

        return Handler

    def start(self) -> "MockDetectorServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, name="mock-detector", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
