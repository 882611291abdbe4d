"""Interpreter for routine programs against a perception backend."""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import asdict, dataclass, fields
from typing import Protocol, Sequence, runtime_checkable

from . import geometry
from .dsl import RoutineProgram, check_program
from .errors import StaticCheckError
from .model import Box, ErrorClass, Evidence, Outcome, Verdict

logger = logging.getLogger(__name__)


@runtime_checkable
class PerceptionBackend(Protocol):
    has_ocr: bool

    def detect(self, image_id: str, query: str, threshold: float = 0.0) -> list[Box]: ...

    def read_text(self, image_id: str, region: Box) -> list[str]: ...


@dataclass(frozen=True)
class VmConfig:
    detect_threshold: float = 0.3
    near_frac: float = 0.25
    min_overlap: float = 0.25
    inside_frac: float = 0.9
    contact_tol: float = 0.05

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, values) -> "VmConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: float(v) for k, v in values.items() if k in names and v is not None})


def eval_relation(rel: str, a: Sequence[Box], b: Sequence[Box], cfg: VmConfig) -> tuple[bool, tuple[Box, Box] | None]:
    """Existential relation check; returns the first witness pair found."""
    if rel not in geometry.RELATIONS:
        raise ValueError(f"unknown relation {rel!r}")
    hit = geometry.first_witness(rel, a, b, cfg)
    if hit is None:
        return False, None
    return True, (a[hit[0]], b[hit[1]])


_PUNCT = re.compile(r"[^\w\s]", re.UNICODE)


def normalize_text(s: str) -> str:
    s = unicodedata.normalize("NFKC", s).lower()
    s = _PUNCT.sub(" ", s).replace("_", " ")
    return " ".join(s.split())


def match_text(read: Sequence[str], literal: str) -> bool:
    return bool(matching_texts(read, literal))


def matching_texts(read: Sequence[str], literal: str) -> list[str]:
    target = normalize_text(literal)
    if not target:
        return []
    return [s for s in read if target in normalize_text(s)]


class _Fault(Exception):
    def __init__(self, error_class: ErrorClass, message: str):
        super().__init__(message)
        self.error_class = error_class


def _backend_call(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as e:  # backend failures of any kind are folded into the verdict
        raise _Fault(ErrorClass.BACKEND_FAILURE, f"{type(e).__name__}: {e}") from e


def execute(program: RoutineProgram, image_id: str, backend: PerceptionBackend, cfg: VmConfig = VmConfig()) -> Verdict:
    """Run one routine on one image. Never raises; faults become verdicts."""
    evidence: list[Evidence] = []

    def verdict(outcome: Outcome, error: ErrorClass | None = None, message: str = "") -> Verdict:
        return Verdict(image_id, program.triplet_id, outcome, tuple(evidence), error, message)

    try:
        check_program(program)
    except StaticCheckError as e:
        return verdict(Outcome.INDETERMINATE, ErrorClass.BAD_ROUTINE_GENERATION, str(e))

    regs: dict[str, object] = {}
    try:
        for ins in program.instructions:
            regs[ins.out] = _step(ins, regs, image_id, backend, cfg, evidence)
    except _Fault as f:
        return verdict(Outcome.INDETERMINATE, f.error_class, str(f))
    except Exception as e:  # interpreter bug or corrupted register state
        logger.exception("routine crashed on %s", image_id)
        return verdict(Outcome.INDETERMINATE, ErrorClass.BAD_ROUTINE_EXECUTION, f"{type(e).__name__}: {e}")

    answer = regs[program.answer_register]
    if not isinstance(answer, bool):
        return verdict(Outcome.INDETERMINATE, ErrorClass.BAD_ROUTINE_EXECUTION, "answer register is not boolean")
    if program.degenerate is not None:
        return verdict(Outcome.VIOLATED, program.degenerate, "degenerate routine")
    return verdict(Outcome.SATISFIED if answer else Outcome.VIOLATED)


def _step(ins, regs, image_id, backend, cfg, evidence):
    op = ins.op
    if op == "DETECT":
        boxes = _backend_call(backend.detect, image_id, ins.query, threshold=cfg.detect_threshold)
        kept = [b for b in boxes if b.score >= cfg.detect_threshold]
        kept.sort(key=lambda b: -b.score)
        return kept
    if op == "READ_TEXT":
        if not getattr(backend, "has_ocr", False):
            raise _Fault(ErrorClass.BAD_ROUTINE_EXECUTION, "READ_TEXT on a backend without OCR")
        region = regs[ins.src]
        if not region and ins.strict:
            raise _Fault(ErrorClass.BAD_ROUTINE_EXECUTION, f"READ_TEXT over empty region {ins.src}")
        texts: list[str] = []
        for box in region:
            for s in _backend_call(backend.read_text, image_id, box):
                if s not in texts:
                    texts.append(s)
        return texts
    if op == "ASSERT_RELATION":
        ok, witness = eval_relation(ins.relation, regs[ins.a], regs[ins.b], cfg)
        if ok:
            evidence.append(Evidence(kind=op, register=ins.out, boxes=witness, relation=ins.relation))
        return ok
    if op == "ASSERT_COUNT":
        boxes = regs[ins.src]
        n = len(boxes)
        ok = n == ins.min if ins.exact else n >= ins.min
        if ok:
            evidence.append(Evidence(kind=op, register=ins.out, boxes=tuple(boxes), threshold=ins.min, count=n))
        return ok
    if op == "ASSERT_TEXT_MATCH":
        hits = matching_texts(regs[ins.src], ins.literal)
        if hits:
            evidence.append(Evidence(kind=op, register=ins.out, texts=tuple(hits), literal=ins.literal))
        return bool(hits)
    if op == "NONEMPTY":
        boxes = regs[ins.src]
        if boxes:
            evidence.append(Evidence(kind=op, register=ins.out, boxes=tuple(boxes)))
        return bool(boxes)
    if op == "AND":
        return all(regs[r] for r in ins.args)
    if op == "OR":
        return any(regs[r] for r in ins.args)
    if op == "CONST":
        return ins.value
    raise _Fault(ErrorClass.BAD_ROUTINE_EXECUTION, f"unknown op {op}")


def replay_evidence(ev: Evidence, cfg: VmConfig) -> bool:
    """Re-derive an evidence item from its recorded facts alone."""
    if ev.kind == "ASSERT_RELATION":
        return eval_relation(ev.relation, [ev.boxes[0]], [ev.boxes[1]], cfg)[0]
    if ev.kind == "ASSERT_TEXT_MATCH":
        return match_text(ev.texts, ev.literal)
    if ev.kind == "ASSERT_COUNT":
        return len(ev.boxes) == ev.count and ev.count >= ev.threshold
    if ev.kind == "NONEMPTY":
        return len(ev.boxes) > 0
    return False
