"""Shared domain types, canonicalization and JSON forms.

Every type here is immutable after construction. Nothing in this module
performs I/O; serialization works on plain ``dict``/``list`` values and the
callers decide where bytes go.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .errors import MalformedInput

MAX_QUERY_LENGTH = 4096

ARTICLES = frozenset({"a", "an", "the", "some", "another"})

NUMERALS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
    "a couple of": 2, "a pair of": 2, "couple": 2, "pair": 2,
}

IRREGULAR_PLURALS = {
    "people": "person",
    "men": "man",
    "women": "woman",
    "children": "child",
    "feet": "foot",
    "teeth": "tooth",
    "geese": "goose",
    "mice": "mouse",
    "knives": "knife",
    "leaves": "leaf",
    "shelves": "shelf",
    "wolves": "wolf",
    "loaves": "loaf",
    "calves": "calf",
    "halves": "half",
}
INVARIANT_NOUNS = frozenset({"sheep", "fish", "deer", "series", "species", "glasses", "scissors", "pants", "jeans"})
# Singular nouns ending in -ie that the -ies rule would otherwise mangle.
IE_NOUNS = frozenset({"cookie", "movie", "pie", "tie", "zombie", "hippie", "brownie", "selfie", "smoothie", "goalie"})
_ES_STEMS = ("ss", "sh", "ch", "x", "z", "us")


def singularize(word: str) -> str:
    """Singular form of a lowercase noun; idempotent on its own output."""
    if word in IRREGULAR_PLURALS:
        return IRREGULAR_PLURALS[word]
    if word in INVARIANT_NOUNS or len(word) <= 2:
        return word
    if word.endswith("ies"):
        if word[:-1] in IE_NOUNS:
            return word[:-1]
        if len(word) > 4:
            return word[:-3] + "y"
    if word.endswith("es") and word[:-2].endswith(_ES_STEMS):
        return word[:-2]
    if word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


class Source(str, enum.Enum):
    GRAMMAR = "Grammar"
    EXTERNAL_JSON = "ExternalJson"


class Provenance(str, enum.Enum):
    SYNTHESIZED = "Synthesized"
    EXTERNAL_CODE = "ExternalCode"


class Outcome(str, enum.Enum):
    SATISFIED = "Satisfied"
    VIOLATED = "Violated"
    INDETERMINATE = "Indeterminate"


class ErrorClass(str, enum.Enum):
    BAD_TRIPLET = "BadTriplet"
    BAD_ROUTINE_GENERATION = "BadRoutineGeneration"
    BAD_ROUTINE_EXECUTION = "BadRoutineExecution"
    BACKEND_FAILURE = "BackendFailure"


@dataclass(frozen=True)
class QueryText:
    raw: str

    def errors(self) -> list[str]:
        if not self.raw.strip():
            return ["query: empty query text"]
        if len(self.raw) > MAX_QUERY_LENGTH:
            return [f"query: longer than {MAX_QUERY_LENGTH} characters"]
        return []


@dataclass(frozen=True)
class NounPhrase:
    head: str = ""
    count: int | None = None
    attributes: tuple[str, ...] = ()
    literal: str | None = None

    def phrase(self) -> str:
        """Detector-facing text: attributes followed by the head, no count."""
        return " ".join([*self.attributes, self.head]).strip()

    def is_real_object(self) -> bool:
        return bool(self.head) and self.literal is None

    def errors(self, where: str) -> list[str]:
        out = []
        if not self.head and self.literal is None:
            out.append(f"{where}.head: empty head without literal")
        if self.count is not None and (not isinstance(self.count, int) or self.count < 1):
            out.append(f"{where}.count: must be a positive integer")
        if self.head != self.head.lower():
            out.append(f"{where}.head: not lowercase")
        for a in self.attributes:
            if not a or a != a.lower():
                out.append(f"{where}.attributes: {a!r} not a lowercase word")
        if self.literal is not None and not self.literal.strip():
            out.append(f"{where}.literal: empty literal")
        return out


@dataclass(frozen=True)
class Triplet:
    id: int
    subject: NounPhrase
    predicate: str
    object: NounPhrase

    def __str__(self) -> str:
        obj = self.object.phrase() or repr(self.object.literal)
        return f"({self.subject.phrase()}, {self.predicate}, {obj})"


@dataclass(frozen=True)
class Specification:
    query: QueryText
    triplets: tuple[Triplet, ...]
    # provenance is metadata, not structure: an ingested copy of a parsed
    # spec compares equal to the original
    source: Source = field(default=Source.GRAMMAR, compare=False)


def validate_specification(spec: Specification) -> list[str]:
    errors = list(spec.query.errors())
    if not spec.triplets:
        errors.append("empty specification")
        return errors
    seen: set[int] = set()
    for t in spec.triplets:
        if t.id in seen:
            errors.append(f"duplicate id {t.id}")
        seen.add(t.id)
        where = f"triplet {t.id}"
        if not t.subject.head:
            errors.append(f"{where}: subject.head empty")
        errors.extend(t.subject.errors(f"{where}: subject"))
        if not t.predicate.strip():
            errors.append(f"{where}: predicate empty")
        elif t.predicate != t.predicate.lower():
            errors.append(f"{where}: predicate not lowercase")
        errors.extend(t.object.errors(f"{where}: object"))
    if not errors and sorted(seen) != list(range(len(spec.triplets))):
        errors.append(f"triplet ids must be 0..{len(spec.triplets) - 1}")
    return errors


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in normalized image coordinates (y grows downward)."""

    x0: float
    y0: float
    x1: float
    y1: float
    score: float = 1.0
    label: str = ""

    def __post_init__(self):
        coords = (self.x0, self.y0, self.x1, self.y1, self.score)
        if not all(isinstance(c, (int, float)) and math.isfinite(c) for c in coords):
            raise ValueError(f"non-numeric box field in {self!r}")
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise ValueError(f"box coordinates out of order or range: {self!r}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"box score outside [0, 1]: {self.score}")

    @property
    def coords(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)

    def to_dict(self) -> dict:
        d = {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1, "score": self.score}
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: Any, path: str = "$") -> "Box":
        if not isinstance(d, dict):
            raise MalformedInput("box must be an object", path)
        try:
            return cls(
                float(d["x0"]), float(d["y0"]), float(d["x1"]), float(d["y1"]),
                float(d.get("score", 1.0)), str(d.get("label", "")),
            )
        except KeyError as e:
            raise MalformedInput(f"missing box field {e.args[0]!r}", path) from None
        except (TypeError, ValueError) as e:
            raise MalformedInput(str(e), path) from None


@dataclass(frozen=True)
class Evidence:
    """One fact that made an assertion true (or the raw output of a probe)."""

    kind: str
    register: str = ""
    boxes: tuple[Box, ...] = ()
    texts: tuple[str, ...] = ()
    relation: str | None = None
    literal: str | None = None
    threshold: int | None = None
    count: int | None = None

    def size(self) -> int:
        return len(self.boxes) + len(self.texts)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind}
        if self.register:
            d["register"] = self.register
        if self.boxes:
            d["boxes"] = [b.to_dict() for b in self.boxes]
        if self.texts:
            d["texts"] = list(self.texts)
        for name in ("relation", "literal", "threshold", "count"):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        return d

    @classmethod
    def from_dict(cls, d: Any, path: str = "$") -> "Evidence":
        if not isinstance(d, dict) or not isinstance(d.get("kind"), str):
            raise MalformedInput("evidence must be an object with a kind", path)
        boxes = tuple(Box.from_dict(b, f"{path}.boxes[{i}]") for i, b in enumerate(d.get("boxes", [])))
        return cls(
            kind=d["kind"], register=d.get("register", ""), boxes=boxes,
            texts=tuple(d.get("texts", [])), relation=d.get("relation"),
            literal=d.get("literal"), threshold=d.get("threshold"), count=d.get("count"),
        )


@dataclass(frozen=True)
class Verdict:
    image_id: str
    triplet_id: int
    outcome: Outcome
    evidence: tuple[Evidence, ...] = ()
    error_class: ErrorClass | None = None
    message: str = field(default="", compare=False)

    def __post_init__(self):
        if self.outcome is Outcome.INDETERMINATE and self.error_class is None:
            raise ValueError("indeterminate verdict requires an error class")
        if self.outcome is Outcome.SATISFIED and self.error_class is not None:
            raise ValueError("satisfied verdict cannot carry an error class")
        if self.outcome is Outcome.VIOLATED and self.error_class not in (
            None, ErrorClass.BAD_TRIPLET, ErrorClass.BAD_ROUTINE_GENERATION,
        ):
            raise ValueError(f"violated verdict cannot carry {self.error_class}")

    def evidence_size(self) -> int:
        return sum(e.size() for e in self.evidence)


@dataclass(frozen=True, order=False)
class TruthScore:
    satisfied: int
    total: int
    all_indeterminate: bool = False

    def __post_init__(self):
        if self.total < 1 or not 0 <= self.satisfied <= self.total:
            raise ValueError(f"invalid truth score {self.satisfied}/{self.total}")

    @property
    def value(self) -> Fraction:
        return Fraction(self.satisfied, self.total)

    def __str__(self) -> str:
        return f"{self.satisfied}/{self.total}"


@dataclass(frozen=True)
class RankedEntry:
    image_id: str
    truth_score: TruthScore
    rerank_score: Fraction | None = None
    baseline_rank: int | None = None


@dataclass(frozen=True)
class RankedList:
    entries: tuple[RankedEntry, ...] = ()

    @property
    def image_ids(self) -> list[str]:
        return [e.image_id for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


# -- canonicalization -------------------------------------------------------

_QUOTED = re.compile(r"""^\s*["'“‘](.+?)["'”’]\s*$""")


def parse_numeral(word: str) -> int | None:
    if word.isdigit():
        n = int(word)
        return n if n >= 1 else None
    return NUMERALS.get(word)


def canonicalize(text: str) -> NounPhrase:
    """Canonical noun phrase for raw noun text such as ``"two boats"``."""
    m = _QUOTED.match(text)
    if m:
        return NounPhrase(literal=m.group(1))
    words = text.lower().split()
    # the last word is always kept as the head, even if it looks like an article
    while len(words) > 1 and words[0] in ARTICLES:
        if " ".join(words[:3]) in NUMERALS:
            break
        words = words[1:]
    count = None
    for span in (3, 1):
        if len(words) > span and parse_numeral(" ".join(words[:span])) is not None:
            count = parse_numeral(" ".join(words[:span]))
            words = words[span:]
            break
    if not words:
        return NounPhrase(count=count)
    return NounPhrase(head=singularize(words[-1]), count=count, attributes=tuple(words[:-1]))


def render_phrase(np: NounPhrase) -> str:
    """Inverse of :func:`canonicalize` on canonical phrases."""
    if np.literal is not None and not np.head:
        return f'"{np.literal}"'
    words = [str(np.count)] if np.count is not None else []
    return " ".join(words + [*np.attributes, np.head])


# -- JSON forms -------------------------------------------------------------

def noun_phrase_to_dict(np: NounPhrase) -> dict:
    d: dict[str, Any] = {}
    if np.head:
        d["head"] = np.head
    if np.count is not None:
        d["count"] = np.count
    if np.attributes:
        d["attributes"] = list(np.attributes)
    if np.literal is not None:
        d["literal"] = np.literal
    return d


def noun_phrase_from_dict(d: Any, path: str) -> NounPhrase:
    if not isinstance(d, dict):
        raise MalformedInput("noun phrase must be an object", path)
    unknown = set(d) - {"head", "count", "attributes", "literal"}
    if unknown:
        raise MalformedInput(f"unknown fields {sorted(unknown)}", path)
    head = d.get("head", "")
    if not isinstance(head, str):
        raise MalformedInput("head must be a string", f"{path}.head")
    count = d.get("count")
    if count is not None and (isinstance(count, bool) or not isinstance(count, int)):
        raise MalformedInput("count must be an integer", f"{path}.count")
    attrs = d.get("attributes", [])
    if not isinstance(attrs, list) or not all(isinstance(a, str) for a in attrs):
        raise MalformedInput("attributes must be a list of strings", f"{path}.attributes")
    literal = d.get("literal")
    if literal is not None and not isinstance(literal, str):
        raise MalformedInput("literal must be a string", f"{path}.literal")
    return NounPhrase(head=head, count=count, attributes=tuple(attrs), literal=literal)


def triplet_to_dict(t: Triplet) -> dict:
    return {"id": t.id, "s": noun_phrase_to_dict(t.subject), "p": t.predicate, "o": noun_phrase_to_dict(t.object)}


def triplet_from_dict(d: Any, path: str) -> Triplet:
    if not isinstance(d, dict):
        raise MalformedInput("triplet must be an object", path)
    for key in ("id", "s", "p", "o"):
        if key not in d:
            raise MalformedInput(f"missing field {key!r}", path)
    if isinstance(d["id"], bool) or not isinstance(d["id"], int):
        raise MalformedInput("id must be an integer", f"{path}.id")
    if not isinstance(d["p"], str):
        raise MalformedInput("predicate must be a string", f"{path}.p")
    return Triplet(
        id=d["id"],
        subject=noun_phrase_from_dict(d["s"], f"{path}.s"),
        predicate=d["p"],
        object=noun_phrase_from_dict(d["o"], f"{path}.o"),
    )


def spec_to_dict(spec: Specification) -> dict:
    return {"query": spec.query.raw, "triplets": [triplet_to_dict(t) for t in spec.triplets]}


def spec_from_dict(d: Any, source: Source = Source.EXTERNAL_JSON, path: str = "$") -> Specification:
    if not isinstance(d, dict):
        raise MalformedInput("specification must be an object", path)
    if not isinstance(d.get("query"), str):
        raise MalformedInput("query must be a string", f"{path}.query")
    triplets = d.get("triplets")
    if not isinstance(triplets, list):
        raise MalformedInput("triplets must be a list", f"{path}.triplets")
    return Specification(
        query=QueryText(d["query"]),
        triplets=tuple(triplet_from_dict(t, f"{path}.triplets[{i}]") for i, t in enumerate(triplets)),
        source=source,
    )


def verdict_to_dict(v: Verdict) -> dict:
    d = {
        "image": v.image_id,
        "triplet": v.triplet_id,
        "outcome": v.outcome.value,
        "evidence": [e.to_dict() for e in v.evidence],
        "error": v.error_class.value if v.error_class else None,
    }
    if v.message:
        d["message"] = v.message
    return d


def verdict_from_dict(d: Any, path: str = "$") -> Verdict:
    if not isinstance(d, dict):
        raise MalformedInput("verdict must be an object", path)
    try:
        outcome = Outcome(d["outcome"])
        error = ErrorClass(d["error"]) if d.get("error") else None
        return Verdict(
            image_id=str(d["image"]),
            triplet_id=int(d["triplet"]),
            outcome=outcome,
            evidence=tuple(Evidence.from_dict(e, f"{path}.evidence[{i}]") for i, e in enumerate(d.get("evidence", []))),
            error_class=error,
            message=d.get("message", ""),
        )
    except KeyError as e:
        raise MalformedInput(f"missing field {e.args[0]!r}", path) from None
    except ValueError as e:
        raise MalformedInput(str(e), path) from None


def truth_score_to_dict(s: TruthScore) -> dict:
    d = {"satisfied": s.satisfied, "total": s.total, "value": str(s.value)}
    if s.all_indeterminate:
        d["all_indeterminate"] = True
    return d


def truth_score_from_dict(d: Any, path: str = "$") -> TruthScore:
    try:
        return TruthScore(int(d["satisfied"]), int(d["total"]), bool(d.get("all_indeterminate", False)))
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedInput(f"bad truth score: {e}", path) from None


def ranked_list_to_dicts(ranking: RankedList) -> list[dict]:
    out = []
    for e in ranking.entries:
        d: dict[str, Any] = {"image_id": e.image_id, "truth_score": truth_score_to_dict(e.truth_score)}
        if e.rerank_score is not None:
            d["rerank_score"] = str(e.rerank_score)
        if e.baseline_rank is not None:
            d["baseline_rank"] = e.baseline_rank
        out.append(d)
    return out


def ranked_list_from_dicts(items: Sequence[Any], path: str = "$") -> RankedList:
    entries = []
    for i, d in enumerate(items):
        where = f"{path}[{i}]"
        if not isinstance(d, dict) or "image_id" not in d:
            raise MalformedInput("ranked entry needs image_id", where)
        rr = d.get("rerank_score")
        entries.append(RankedEntry(
            image_id=str(d["image_id"]),
            truth_score=truth_score_from_dict(d.get("truth_score"), f"{where}.truth_score"),
            rerank_score=Fraction(rr) if rr is not None else None,
            baseline_rank=d.get("baseline_rank"),
        ))
    return RankedList(tuple(entries))


def boxes_to_dicts(boxes: Iterable[Box]) -> list[dict]:
    return [b.to_dict() for b in boxes]
