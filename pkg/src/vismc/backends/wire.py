"""JSON wire protocol for remote detectors (``POST /v1/perceive``)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from ..errors import MalformedInput, ProtocolError
from ..model import Box

PATH = "/v1/perceive"

UNKNOWN_IMAGE, BAD_REQUEST, MODEL_FAILURE = 1, 2, 3
HTTP_STATUS = {UNKNOWN_IMAGE: 404, BAD_REQUEST: 400, MODEL_FAILURE: 500}


@dataclass(frozen=True)
class DetectorWireRequest:
    image_id: str
    queries: tuple[str, ...] = ()
    task: str = "detect"
    region: Box | None = None
    threshold: float = 0.0

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "image_id": self.image_id,
            "queries": list(self.queries),
            "task": self.task,
            "threshold": self.threshold,
        }
        if self.region is not None:
            d["region"] = self.region.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: Any) -> "DetectorWireRequest":
        if not isinstance(d, dict):
            raise MalformedInput("request must be an object")
        if not isinstance(d.get("image_id"), str):
            raise MalformedInput("image_id must be a string", "$.image_id")
        task = d.get("task", "detect")
        if task not in ("detect", "ocr"):
            raise MalformedInput(f"unknown task {task!r}", "$.task")
        queries = d.get("queries", [])
        if not isinstance(queries, list) or not all(isinstance(q, str) for q in queries):
            raise MalformedInput("queries must be a list of strings", "$.queries")
        threshold = d.get("threshold", 0.0)
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
            raise MalformedInput("threshold must be a number", "$.threshold")
        region = Box.from_dict(d["region"], "$.region") if d.get("region") is not None else None
        if task == "ocr" and region is None:
            raise MalformedInput("ocr task requires a region", "$.region")
        return cls(d["image_id"], tuple(queries), task, region, float(threshold))


@dataclass(frozen=True)
class DetectorWireResponse:
    results: tuple[tuple[Box, ...], ...] = ()
    texts: tuple[str, ...] = ()
    model: str = ""
    latency_ms: int = 0
    error: dict | None = field(default=None)

    def to_dict(self) -> dict:
        if self.error is not None:
            return {"error": dict(self.error)}
        return {
            "results": [[b.to_dict() for b in boxes] for boxes in self.results],
            "texts": list(self.texts),
            "model": self.model,
            "latency_ms": self.latency_ms,
        }


def error_payload(code: int, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def parse_response(raw: bytes, request: DetectorWireRequest) -> DetectorWireResponse:
    """Decode and validate a response body. Raises :class:`ProtocolError`."""
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ProtocolError(f"response is not JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ProtocolError("response must be an object")
    has_results, has_error = "results" in doc, "error" in doc
    if has_results == has_error:
        raise ProtocolError("response must carry exactly one of 'results' and 'error'")
    if has_error:
        err = doc["error"]
        if not isinstance(err, dict) or not isinstance(err.get("code"), int):
            raise ProtocolError("error payload needs an integer code")
        return DetectorWireResponse(error={"code": err["code"], "message": str(err.get("message", ""))})
    results = doc["results"]
    if not isinstance(results, list) or not all(isinstance(r, list) for r in results):
        raise ProtocolError("results must be a list of box lists")
    if request.task == "detect" and len(results) != len(request.queries):
        raise ProtocolError(f"expected {len(request.queries)} result lists, got {len(results)}")
    try:
        boxes = tuple(
            tuple(Box.from_dict(b, f"$.results[{i}][{j}]") for j, b in enumerate(r))
            for i, r in enumerate(results)
        )
    except MalformedInput as e:
        raise ProtocolError(str(e)) from None
    texts = doc.get("texts", [])
    if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
        raise ProtocolError("texts must be a list of strings")
    latency = doc.get("latency_ms", 0)
    return DetectorWireResponse(
        results=boxes, texts=tuple(texts), model=str(doc.get("model", "")),
        latency_ms=int(latency) if isinstance(latency, (int, float)) else 0,
    )
