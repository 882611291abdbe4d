"""Rule-based compiler from triplets to routine programs.

Each predicate resolves to one class through a data-driven lexicon; the class
selects a routine template. Counting composes with any base class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dsl import Instruction, RoutineProgram, check_program
from .errors import MalformedInput, SynthesisError
from .geometry import RELATIONS
from .model import ARTICLES, Provenance, Specification, Triplet
from .parser import PREPOSITIONS

SPATIAL, READING, EXISTENCE, ATTRIBUTE, ACTION = "spatial", "reading", "existence", "attribute", "action"
BASE_CLASSES = (SPATIAL, READING, EXISTENCE, ATTRIBUTE, ACTION)

FUNCTION_WORDS = PREPOSITIONS | ARTICLES

DEFAULT_PREDICATES = {
    "on": "spatial:on", "on top of": "spatial:on", "atop": "spatial:on", "onto": "spatial:on",
    "under": "spatial:under", "underneath": "spatial:under", "beneath": "spatial:under",
    "above": "spatial:above", "over": "spatial:above",
    "below": "spatial:below",
    "near": "spatial:near", "by": "spatial:near", "located by": "spatial:near",
    "next to": "spatial:near", "beside": "spatial:near",
    "left of": "spatial:left_of", "right of": "spatial:right_of",
    "in": "spatial:inside", "inside": "spatial:inside", "within": "spatial:inside",
    # depth relations have no 2-D box test; overlap-or-near is the closest proxy
    "behind": "spatial:overlap_or_near", "in front of": "spatial:overlap_or_near",
    "reads": "reading", "says": "reading", "labeled": "reading", "displays": "reading",
    "with": "existence", "has": "existence", "holding": "existence", "containing": "existence",
    "of": "existence",
    "is": "attribute", "made of": "attribute", "depicts": "attribute",
}

DEFAULT_ATTRIBUTE_WORDS = frozenset({
    "white", "black", "red", "green", "blue", "yellow", "orange", "purple", "pink", "brown",
    "gray", "grey", "silver", "gold", "golden", "dark", "light", "colorful", "striped",
    "wooden", "metal", "metallic", "plastic", "glass", "brick", "stone", "concrete", "dirt",
    "paved", "leather", "paper", "empty", "full", "open", "closed", "wet", "dry", "old", "new",
    "large", "small", "big", "little", "tall", "short", "long", "young", "clean", "dirty",
    "broken", "round", "square", "sliced", "cooked", "fresh", "ripe", "snowy", "sunny",
})


@dataclass(frozen=True)
class PredicateLexicon:
    predicates: dict = field(default_factory=lambda: dict(DEFAULT_PREDICATES))
    attribute_words: frozenset = DEFAULT_ATTRIBUTE_WORDS
    strict_counting: bool = False

    def __post_init__(self):
        for key, cls in self.predicates.items():
            base, _, rel = cls.partition(":")
            if base not in BASE_CLASSES or (base == SPATIAL) != bool(rel) or (rel and rel not in RELATIONS):
                raise ValueError(f"bad lexicon class {cls!r} for predicate {key!r}")

    def lookup(self, predicate: str) -> str | None:
        """Class of the longest lexicon key that is a whole-word suffix of ``predicate``."""
        words = predicate.split()
        for start in range(len(words)):
            key = " ".join(words[start:])
            if key in self.predicates:
                return self.predicates[key]
        return None

    def fingerprint(self) -> dict:
        return {
            "predicates": dict(sorted(self.predicates.items())),
            "attribute_words": sorted(self.attribute_words),
            "strict_counting": self.strict_counting,
        }


def load_lexicon(path: str | Path) -> PredicateLexicon:
    """Load a lexicon file.

    Either a flat ``{"predicate": "class"}`` map, or an object with a
    ``predicates`` map plus optional ``attribute_words`` and
    ``strict_counting``. Entries extend the built-in defaults.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise MalformedInput(f"invalid JSON: {e}", str(path)) from None
    if not isinstance(doc, dict):
        raise MalformedInput("lexicon must be an object", str(path))
    if "predicates" in doc and isinstance(doc["predicates"], dict):
        preds, words, strict = doc["predicates"], doc.get("attribute_words", []), doc.get("strict_counting", False)
    else:
        preds, words, strict = doc, [], False
    if not all(isinstance(k, str) and isinstance(v, str) for k, v in preds.items()):
        raise MalformedInput("predicate map must be string to string", f"{path}.predicates")
    try:
        return PredicateLexicon(
            predicates={**DEFAULT_PREDICATES, **{k.lower(): v for k, v in preds.items()}},
            attribute_words=DEFAULT_ATTRIBUTE_WORDS | frozenset(w.lower() for w in words),
            strict_counting=bool(strict),
        )
    except ValueError as e:
        raise MalformedInput(str(e), str(path)) from None


DEFAULT_LEXICON = PredicateLexicon()


@dataclass(frozen=True)
class PredicateClass:
    base: str
    relation: str | None = None
    counting: bool = False

    def __str__(self) -> str:
        name = {SPATIAL: "Spatial", READING: "Reading", EXISTENCE: "Existence",
                ATTRIBUTE: "Attribute", ACTION: "ActionComposite"}[self.base]
        if self.relation:
            name += f"({self.relation})"
        return name + (" + Counting" if self.counting else "")


def _attribute_like(t: Triplet, lex: PredicateLexicon) -> bool:
    o = t.object
    if o.literal is not None:
        return t.predicate != "is"
    if o.count is not None or o.attributes or not o.head:
        return False
    if t.predicate == "is":
        return o.head in lex.attribute_words or o.head.endswith("ing")
    return True


def classify_predicate(t: Triplet, lex: PredicateLexicon = DEFAULT_LEXICON) -> PredicateClass:
    counting = t.subject.count is not None or t.object.count is not None
    cls = lex.lookup(t.predicate)
    base, _, rel = (cls or ACTION).partition(":")
    if base == ATTRIBUTE:
        if not _attribute_like(t, lex):
            base = READING if t.object.literal is not None else ACTION
    elif t.object.literal is not None:
        base = READING
    if base != SPATIAL:
        rel = ""
    return PredicateClass(base, rel or None, counting)


class _Builder:
    def __init__(self):
        self.instructions: list[Instruction] = []

    def emit(self, op: str, **kw) -> str:
        out = f"r{len(self.instructions)}"
        self.instructions.append(Instruction(op=op, out=out, **kw))
        return out


def _check_triplet(t: Triplet) -> None:
    problems = []
    if not t.subject.head:
        problems.append("subject head is empty")
    if not t.predicate.strip():
        problems.append("predicate is empty")
    if not t.object.head and t.object.literal is None:
        problems.append("object has neither head nor literal")
    for where, np_ in (("subject", t.subject), ("object", t.object)):
        if np_.literal is None and np_.head in FUNCTION_WORDS and not np_.attributes:
            problems.append(f"{where} {np_.head!r} is a function word, not an entity")
    for where, np_ in (("subject", t.subject), ("object", t.object)):
        if np_.count is not None and np_.count < 1:
            problems.append(f"{where} count must be positive")
    if problems:
        raise SynthesisError(f"bad triplet {t.id}: " + "; ".join(problems))


def synthesize(t: Triplet, lex: PredicateLexicon = DEFAULT_LEXICON) -> RoutineProgram:
    """Compile one triplet into a routine program."""
    _check_triplet(t)
    pc = classify_predicate(t, lex)
    b = _Builder()
    s, o = t.subject, t.object
    checks: list[str] = []
    regs: dict[str, str] = {}
    has_relation = False

    if pc.base == SPATIAL:
        regs["s"] = b.emit("DETECT", query=s.phrase())
        regs["o"] = b.emit("DETECT", query=o.phrase())
        checks.append(b.emit("ASSERT_RELATION", relation=pc.relation, a=regs["s"], b=regs["o"]))
        has_relation = True
    elif pc.base == READING:
        literal = o.literal if o.literal is not None else o.phrase()
        regs["s"] = b.emit("DETECT", query=s.phrase())
        texts = b.emit("READ_TEXT", src=regs["s"])
        checks.append(b.emit("ASSERT_TEXT_MATCH", src=texts, literal=literal))
    elif pc.base == ATTRIBUTE:
        phrase = s.phrase() if o.literal is not None else f"{o.head} {s.phrase()}"
        regs["s"] = b.emit("DETECT", query=phrase)
        checks.append(b.emit("NONEMPTY", src=regs["s"]))
    elif pc.base == EXISTENCE:
        regs["s"] = b.emit("DETECT", query=s.phrase())
        regs["o"] = b.emit("DETECT", query=o.phrase())
        checks.append(b.emit("ASSERT_RELATION", relation="overlap_or_near", a=regs["s"], b=regs["o"]))
        has_relation = True
    else:
        composite = b.emit("DETECT", query=f"{s.phrase()} {t.predicate} {o.phrase()}")
        regs["s"] = b.emit("DETECT", query=s.phrase())
        regs["o"] = b.emit("DETECT", query=o.phrase())
        checks.extend(b.emit("NONEMPTY", src=r) for r in (composite, regs["s"], regs["o"]))

    if pc.counting:
        for key, np_ in (("s", s), ("o", o)):
            if np_.count is not None and key in regs:
                checks.append(b.emit("ASSERT_COUNT", src=regs[key], min=np_.count, exact=lex.strict_counting))
        if not has_relation and "o" in regs and o.is_real_object():
            checks.append(b.emit("ASSERT_RELATION", relation="near", a=regs["s"], b=regs["o"]))

    if len(checks) > 1:
        b.emit("AND", args=tuple(checks))
    program = RoutineProgram(triplet_id=t.id, instructions=tuple(b.instructions), provenance=Provenance.SYNTHESIZED)
    check_program(program)
    return program


def synthesize_all(spec: Specification, lex: PredicateLexicon = DEFAULT_LEXICON) -> list[RoutineProgram]:
    return [synthesize(t, lex) for t in spec.triplets]


def estimate_state_count(spec: Specification) -> dict:
    """Routine count under triplet-local checking vs. the subgraph count it avoids."""
    n = len(spec.triplets)
    return {"triplet_local": n, "cartesian": 2 ** n - 1}
