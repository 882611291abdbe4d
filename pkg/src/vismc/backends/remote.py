"""HTTP client for remote open-vocabulary detectors."""

from __future__ import annotations

import http.client
import json
import logging
import socket
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

from ..errors import ProtocolError, RemoteError, TransportError
from ..model import Box
from .wire import PATH, DetectorWireRequest, DetectorWireResponse, parse_response

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RemoteConfig:
    retries: int = 2
    timeout_ms: int = 10_000
    backoff_ms: int = 50
    max_in_flight: int = 8
    # per-attempt cap; None lets one attempt use the whole deadline
    attempt_timeout_ms: int | None = None


def _post(url: str, body: bytes, timeout: float) -> bytes:
    req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.read()
    except urllib.error.HTTPError as e:
        payload = e.read()
        # error payloads ride on 4xx/5xx statuses; anything else is transport noise
        try:
            doc = json.loads(payload)
        except (json.JSONDecodeError, UnicodeDecodeError):
            doc = None
        if isinstance(doc, dict) and "error" in doc:
            return payload
        raise TransportError(f"HTTP {e.code} from {url}") from None


def remote_detect(endpoint: str, req: DetectorWireRequest, cfg: RemoteConfig = RemoteConfig(),
                  _sleep=time.sleep) -> DetectorWireResponse:
    """POST one request, retrying transport failures with exponential backoff.

    Total time across attempts is bounded by ``cfg.timeout_ms``.
    """
    url = endpoint.rstrip("/") + PATH if not endpoint.rstrip("/").endswith(PATH) else endpoint
    body = json.dumps(req.to_dict()).encode()
    deadline = time.monotonic() + cfg.timeout_ms / 1000
    last: Exception | None = None
    for attempt in range(cfg.retries + 1):
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            break
        try:
            if cfg.attempt_timeout_ms is not None:
                remaining = min(remaining, cfg.attempt_timeout_ms / 1000)
            raw = _post(url, body, remaining)
        except TransportError as e:
            last = e
        except (urllib.error.URLError, http.client.HTTPException, ConnectionError, socket.timeout, OSError) as e:
            last = e
        else:
            resp = parse_response(raw, req)
            if resp.error is not None:
                raise RemoteError(resp.error["code"], resp.error.get("message", ""))
            return resp
        if attempt < cfg.retries:
            delay = cfg.backoff_ms / 1000 * (2 ** attempt)
            delay = min(delay, max(0.0, deadline - time.monotonic()))
            logger.debug("retrying %s after %s (attempt %d)", url, last, attempt + 1)
            _sleep(delay)
    if last is None:
        raise TransportError(f"deadline of {cfg.timeout_ms} ms exceeded before contacting {url}")
    raise TransportError(f"{url}: {type(last).__name__}: {last}") from last


class RemoteBackend:
    """PerceptionBackend over the wire protocol; bounds in-flight requests."""

    def __init__(self, endpoint: str, cfg: RemoteConfig = RemoteConfig(), has_ocr: bool = True):
        self.endpoint = endpoint
        self.cfg = cfg
        self.has_ocr = has_ocr
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)

    def _call(self, req: DetectorWireRequest) -> DetectorWireResponse:
        with self._slots:
            return remote_detect(self.endpoint, req, self.cfg)

    def detect_batch(self, image_id: str, queries: list[str], threshold: float = 0.0) -> list[list[Box]]:
        resp = self._call(DetectorWireRequest(image_id, tuple(queries), "detect", None, threshold))
        return [list(r) for r in resp.results]

    def detect(self, image_id: str, query: str, threshold: float = 0.0) -> list[Box]:
        return self.detect_batch(image_id, [query], threshold)[0]

    def read_text(self, image_id: str, region: Box) -> list[str]:
        resp = self._call(DetectorWireRequest(image_id, (), "ocr", region, 0.0))
        return list(resp.texts)


__all__ = ["ProtocolError", "RemoteBackend", "RemoteConfig", "remote_detect"]
