"""On-disk result store: journal during a run, content-addressed segments after.

Layout::

    <root>/manifest.json        plan hash, completion flag, segment digests
    <root>/segments/<sha>.jsonl one sorted segment per table
    <root>/journal.jsonl        records appended since the last compaction

Every record is keyed; a key is written at most once. Re-writing the same
value is a no-op and a different value is a :class:`StoreError`. The
manifest is a pure function of the stored records, so any two runs that
compute the same results produce byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from pathlib import Path
from typing import Any, Iterator

from ..errors import PlanMismatch, StoreCorrupt, StoreError
from ..io import atomic_write

logger = logging.getLogger(__name__)

TABLES = ("specs", "routines", "verdicts")
FORMAT = "vismc-store/1"


def _canon(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ResultStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._tables: dict[str, dict[str, Any]] = {t: {} for t in TABLES}
        self._lock = threading.Lock()
        self._journal = None
        self.plan_hash: str | None = None
        self.complete = False
        self._load()

    # -- loading -----------------------------------------------------------
    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def journal_path(self) -> Path:
        return self.root / "journal.jsonl"

    def exists(self) -> bool:
        return self.manifest_path.exists()

    def _load(self) -> None:
        if not self.manifest_path.exists():
            return
        try:
            manifest = json.loads(self.manifest_path.read_text())
        except json.JSONDecodeError as e:
            raise StoreCorrupt(f"{self.manifest_path}: {e}") from None
        if manifest.get("format") != FORMAT:
            raise StoreCorrupt(f"{self.manifest_path}: unknown format {manifest.get('format')!r}")
        self.plan_hash = manifest.get("plan_hash")
        self.complete = bool(manifest.get("complete"))
        for table, seg in manifest.get("segments", {}).items():
            path = self.root / "segments" / f"{seg['sha256']}.jsonl"
            data = path.read_bytes()
            if _sha(data) != seg["sha256"]:
                raise StoreCorrupt(f"{path}: digest mismatch")
            for line in data.decode().splitlines():
                rec = json.loads(line)
                self._tables[table][_canon(rec["k"])] = rec["v"]
        if self.journal_path.exists():
            self._replay_journal()

    def _replay_journal(self) -> None:
        raw = self.journal_path.read_bytes()
        lines = raw.split(b"\n")
        # a run killed mid-write leaves at most one partial trailing line
        tail = lines.pop()
        if tail:
            logger.warning("dropping partial journal record in %s", self.journal_path)
            with self.journal_path.open("r+b") as fh:
                fh.truncate(len(raw) - len(tail))
        for n, line in enumerate(lines, 1):
            if not line:
                continue
            try:
                rec = json.loads(line)
                body = _canon([rec["t"], rec["k"], rec["v"]])
            except (json.JSONDecodeError, KeyError, TypeError):
                raise StoreCorrupt(f"{self.journal_path}:{n}: unreadable record") from None
            if _sha(body.encode()) != rec.get("sha256"):
                raise StoreCorrupt(f"{self.journal_path}:{n}: checksum mismatch")
            self._tables[rec["t"]][_canon(rec["k"])] = rec["v"]

    # -- writing -----------------------------------------------------------
    def begin(self, plan_hash: str) -> None:
        """Bind the store to a plan; refuses a store created for another plan."""
        if self.plan_hash is not None and self.plan_hash != plan_hash:
            raise PlanMismatch(f"store {self.root} was built for plan {self.plan_hash[:12]}, not {plan_hash[:12]}")
        self.root.mkdir(parents=True, exist_ok=True)
        self.plan_hash = plan_hash
        if not self.manifest_path.exists():
            self._write_manifest(complete=False)

    def upsert(self, table: str, key: list, value: Any) -> bool:
        """Insert a record. Returns False if an equal record already exists."""
        if table not in self._tables:
            raise StoreError(f"unknown table {table!r}")
        k = _canon(key)
        with self._lock:
            existing = self._tables[table].get(k)
            if existing is not None:
                if _canon(existing) != _canon(value):
                    raise StoreError(f"conflicting write to {table}{k}")
                return False
            body = _canon([table, key, value])
            line = json.dumps({"t": table, "k": key, "v": value, "sha256": _sha(body.encode())}, sort_keys=True)
            try:
                if self._journal is None:
                    self.root.mkdir(parents=True, exist_ok=True)
                    self._journal = self.journal_path.open("a", encoding="utf-8")
                self._journal.write(line + "\n")
                self._journal.flush()
            except OSError as e:
                raise StoreError(f"cannot append to {self.journal_path}: {e}") from e
            self._tables[table][k] = value
            self.complete = False
            return True

    def close(self) -> None:
        with self._lock:
            if self._journal is not None:
                self._journal.flush()
                os.fsync(self._journal.fileno())
                self._journal.close()
                self._journal = None

    def finalize(self) -> None:
        """Compact all records into segments and mark the store complete."""
        self.close()
        self._write_manifest(complete=True)
        if self.journal_path.exists():
            self.journal_path.unlink()

    def _write_manifest(self, complete: bool) -> None:
        segments = {}
        seg_dir = self.root / "segments"
        for table in TABLES:
            records = self._tables[table]
            if not records and not complete:
                continue
            content = "".join(
                _canon({"k": json.loads(k), "v": records[k]}) + "\n" for k in sorted(records)
            ).encode()
            digest = _sha(content)
            path = seg_dir / f"{digest}.jsonl"
            if not path.exists():
                atomic_write(path, content)
            segments[table] = {"sha256": digest, "records": len(records)}
        manifest = {"format": FORMAT, "plan_hash": self.plan_hash, "complete": complete, "segments": segments}
        atomic_write(self.manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        self.complete = complete

    # -- reading -----------------------------------------------------------
    def get(self, table: str, key: list) -> Any:
        return self._tables[table].get(_canon(key))

    def has(self, table: str, key: list) -> bool:
        return _canon(key) in self._tables[table]

    def items(self, table: str) -> Iterator[tuple[list, Any]]:
        for k in sorted(self._tables[table]):
            yield json.loads(k), self._tables[table][k]

    def count(self, table: str) -> int:
        return len(self._tables[table])

    def manifest_bytes(self) -> bytes:
        return self.manifest_path.read_bytes()

    def snapshot(self) -> dict[str, dict[str, Any]]:
        return {t: dict(sorted(v.items())) for t, v in self._tables.items()}
