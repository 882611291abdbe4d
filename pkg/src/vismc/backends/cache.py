"""Write-through replay cache and a serializing adapter for backends."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from pathlib import Path

from ..errors import CacheMiss, StoreCorrupt
from ..model import Box

logger = logging.getLogger(__name__)

WRITE_THROUGH, REPLAY = "write-through", "replay"


def _digest(key: str, value) -> str:
    return hashlib.sha256(json.dumps([key, value], sort_keys=True, separators=(",", ":")).encode()).hexdigest()


class CachedBackend:
    """Persists every backend answer in an append-only JSONL file.

    Each line is ``{"k": key, "v": value, "sha256": digest}``; a digest
    mismatch or an unparseable line (e.g. a truncated file) raises
    :class:`StoreCorrupt` on open. In replay mode the inner backend is never
    called and a miss raises :class:`CacheMiss`.
    """

    def __init__(self, inner, path: str | Path, mode: str = WRITE_THROUGH, has_ocr: bool | None = None):
        if mode not in (WRITE_THROUGH, REPLAY):
            raise ValueError(f"unknown cache mode {mode!r}")
        if mode == WRITE_THROUGH and inner is None:
            raise ValueError("write-through cache needs an inner backend")
        self.inner = inner
        self.path = Path(path)
        self.mode = mode
        self.has_ocr = has_ocr if has_ocr is not None else getattr(inner, "has_ocr", True)
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()
        self._entries: dict[str, object] = {}
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        with self.path.open("rb") as fh:
            for n, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    key, value, digest = rec["k"], rec["v"], rec["sha256"]
                except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError):
                    raise StoreCorrupt(f"{self.path}:{n}: unreadable cache record") from None
                if not line.endswith(b"\n") or _digest(key, value) != digest:
                    raise StoreCorrupt(f"{self.path}:{n}: checksum mismatch")
                self._entries[key] = value

    def _append(self, key: str, value) -> None:
        line = json.dumps({"k": key, "v": value, "sha256": _digest(key, value)}, sort_keys=True) + "\n"
        with self._lock:
            if key in self._entries:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            self._entries[key] = value

    def _lookup(self, key: str, compute):
        if key in self._entries:
            self.hits += 1
            return self._entries[key]
        self.misses += 1
        if self.mode == REPLAY:
            raise CacheMiss(f"replay cache has no entry for {key}")
        value = compute()
        self._append(key, value)
        return value

    @staticmethod
    def key(image_id: str, task: str, query: str | None, region: Box | None, threshold: float) -> str:
        region_key = list(region.coords) if region is not None else None
        return json.dumps([image_id, task, query, region_key, threshold], separators=(",", ":"))

    def detect(self, image_id: str, query: str, threshold: float = 0.0) -> list[Box]:
        key = self.key(image_id, "detect", query, None, threshold)
        value = self._lookup(key, lambda: [b.to_dict() for b in self.inner.detect(image_id, query, threshold=threshold)])
        return [Box.from_dict(d) for d in value]

    def read_text(self, image_id: str, region: Box) -> list[str]:
        key = self.key(image_id, "ocr", None, region, 0.0)
        return list(self._lookup(key, lambda: list(self.inner.read_text(image_id, region))))

    def __len__(self) -> int:
        return len(self._entries)


class SerializedBackend:
    """Funnels calls to a backend that is not safe for concurrent use."""

    def __init__(self, inner):
        self.inner = inner
        self.has_ocr = getattr(inner, "has_ocr", False)
        self._lock = threading.Lock()

    def detect(self, image_id: str, query: str, threshold: float = 0.0) -> list[Box]:
        with self._lock:
            return self.inner.detect(image_id, query, threshold=threshold)

    def read_text(self, image_id: str, region: Box) -> list[str]:
        with self._lock:
            return self.inner.read_text(image_id, region)


def cache_wrap(inner, store_path: str | Path, replay: bool = False):
    return CachedBackend(inner, store_path, REPLAY if replay else WRITE_THROUGH)
