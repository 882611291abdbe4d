"""Deterministic clause grammar turning a query into triplets.

Grammar (tokens are classified by closed word lists plus a few suffix
rules for open-class verbs)::

    query    := [preamble] clause (CONJ clause)*
    clause   := np_list [REL] tail
    tail     := VERB [PART* PREP] [obj_list] adjuncts
              | READ literal adjuncts
              | COP (VERB ... | PREP obj_list | obj_list) adjuncts
              | adjunct adjuncts
    adjunct  := PREP obj_list
    obj_list := np (CONJ np)*

Prepositional adjuncts attach to the subject of their clause, which is the
nearest preceding clause-level noun phrase. An object noun phrase may carry
its own relative clause (``a man holding a sign that reads stop``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import InvalidSpecification, MalformedInput, ParseError
from .model import (
    ARTICLES, NounPhrase, QueryText, Source, Specification, Triplet,
    canonicalize, parse_numeral, spec_from_dict, validate_specification,
)

__all__ = ["canonicalize", "ingest_triplets", "parse_query", "composite_specification", "tokenize"]

MULTIWORD_PREPS = {
    "to the left of": "left of",
    "to the right of": "right of",
    "on the left of": "left of",
    "on the right of": "right of",
    "in front of": "in front of",
    "on top of": "on top of",
    "in the middle of": "in",
    "next to": "next to",
    "close to": "near",
    "left of": "left of",
    "right of": "right of",
    "out of": "out of",
    "made of": None,  # verb + preposition, handled by the verb rule
}
NUMERAL_PHRASES = {"a couple of": "two", "a pair of": "two"}
PREPOSITIONS = frozenset({
    "on", "under", "above", "below", "near", "by", "in", "inside", "behind", "with",
    "of", "at", "beside", "besides", "across", "along", "over", "into", "onto", "against",
    "through", "from", "to", "around", "underneath", "beneath", "atop", "toward",
    "towards", "within", "outside", "among", "between", "past", "for", "like",
})
PARTICLES = frozenset({"around", "up", "down", "out", "off", "away", "together", "back", "about", "there", "here"})
COPULAS = frozenset({"is", "are", "was", "were", "be", "being", "been"})
READING_VERBS = frozenset({
    "reads", "read", "reading", "says", "say", "saying", "said", "labeled", "labelled",
    "displays", "display", "displaying",
})
RELATIVES = frozenset({"that", "which", "who", "whose"})
NEGATIONS = frozenset({"no", "not", "without", "never", "none", "nothing", "nobody", "neither", "nor"})
CONJUNCTIONS = frozenset({"and", "&"})
POSSESSION_VERBS = {"has": "with", "have": "with", "having": "with"}
KNOWN_VERBS = frozenset({
    "eats", "eat", "holds", "hold", "rides", "ride", "sits", "sit", "stands", "stand",
    "carries", "carry", "wears", "wear", "looks", "look", "plays", "play", "flies", "fly",
    "contains", "contain", "covers", "cover", "hangs", "hang", "lies", "lie", "walks", "walk",
    "runs", "run", "makes", "make", "pulls", "pull", "drives", "drive", "feeds", "feed",
    "throws", "throw", "catches", "catch", "hits", "hit", "chases", "chase", "cuts", "cut",
    "uses", "use", "watches", "watch", "grazes", "graze", "jumps", "jump", "swims", "swim",
    "waits", "wait", "leans", "lean", "rests", "rest", "sleeps", "sleep", "surrounds",
    "surround", "faces", "face", "shows", "show", "overlooks", "overlook", "crosses", "cross",
    "fills", "fill", "touches", "touch", "kicks", "kick", "pushes", "push", "drinks", "drink",
    "sat", "stood", "lay", "held", "rode", "ate", "wore", "made", "flew", "ran",
})
# nouns that the -ing / -ed suffix rules would otherwise read as verbs
ING_NOUNS = frozenset({
    "building", "ceiling", "clothing", "painting", "ring", "king", "thing", "string",
    "evening", "morning", "wing", "swing", "icing", "frosting", "stuffing", "topping",
    "dressing", "railing", "siding", "sibling", "pudding", "wedding", "bedding", "lighting",
    "parking", "sling", "spring", "awning", "crossing", "landing", "dumpling", "seating",
    "dining", "living", "ping", "sing", "bring", "sting", "clearing", "opening", "carving",
})
ED_NOUNS = frozenset({"shed", "bed", "sled", "seed", "weed", "speed", "feed", "reed", "steed", "bread", "red", "sped"})
PREAMBLES = (
    ("a", "photo", "of"), ("a", "picture", "of"), ("an", "image", "of"), ("a", "photograph", "of"),
    ("there", "is"), ("there", "are"), ("this", "is"),
)

_TOKEN = re.compile(r"""“[^”]*”|"[^"]*"|‘[^’]*’|'[^'\s][^']*'(?=\W|$)|[A-Za-z0-9]+(?:['’][A-Za-z]+)*(?:-[A-Za-z0-9]+)*|[,;&]|\S""")


@dataclass(frozen=True)
class Token:
    kind: str  # WORD QUOTE COMMA PREP
    text: str  # original text (quotes stripped for QUOTE)
    lower: str


@dataclass
class Clause:
    """One parsed clause; ``triplets`` are (subject, predicate, object)."""

    subjects: list[NounPhrase]
    pairs: list[tuple[str, NounPhrase]] = field(default_factory=list)
    extra: list[tuple[NounPhrase, str, NounPhrase]] = field(default_factory=list)


def tokenize(text: str) -> list[Token]:
    raw = _TOKEN.findall(text)
    tokens: list[Token] = []
    for r in raw:
        if r[0] in "\"“'‘" and len(r) >= 2 and r[-1] in "\"”'’":
            tokens.append(Token("QUOTE", r[1:-1].strip(), r[1:-1].strip().lower()))
        elif r in (",", ";"):
            tokens.append(Token("COMMA", r, r))
        elif r in ".!?:":
            continue
        else:
            tokens.append(Token("WORD", r, r.lower().replace("’", "'")))
    # fold multi-word prepositions into single PREP tokens
    out: list[Token] = []
    i = 0
    while i < len(tokens):
        for span in (4, 3, 2):
            words = [t.lower for t in tokens[i:i + span] if t.kind == "WORD"]
            if len(words) == span and " ".join(words) in NUMERAL_PHRASES:
                n = NUMERAL_PHRASES[" ".join(words)]
                out.append(Token("WORD", n, n))
                i += span
                break
            if len(words) == span and " ".join(words) in MULTIWORD_PREPS:
                canon = MULTIWORD_PREPS[" ".join(words)]
                if canon is not None:
                    out.append(Token("PREP", " ".join(words), canon))
                    i += span
                    break
        else:
            t = tokens[i]
            if t.kind == "WORD" and t.lower in PREPOSITIONS:
                t = Token("PREP", t.text, t.lower)
            out.append(t)
            i += 1
    return out


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- token helpers --------------------------------------------------
    def peek(self, k: int = 0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, message: str):
        raise ParseError(message, self.i)

    def is_word(self, t: Token | None, words) -> bool:
        return t is not None and t.kind == "WORD" and t.lower in words

    def is_conj(self, t: Token | None) -> bool:
        return t is not None and (t.kind == "COMMA" or self.is_word(t, CONJUNCTIONS))

    def is_verb(self, t: Token | None) -> bool:
        if t is None or t.kind != "WORD":
            return False
        w = t.lower
        if w in KNOWN_VERBS or w in POSSESSION_VERBS:
            return True
        if w.endswith("ing") and len(w) > 4 and w not in ING_NOUNS:
            return True
        return w.endswith("ed") and len(w) > 4 and w not in ED_NOUNS

    def starts_tail(self, t: Token | None) -> bool:
        return t is not None and (
            self.is_verb(t) or self.is_word(t, COPULAS | READING_VERBS | RELATIVES)
        )

    # -- grammar --------------------------------------------------------
    def query(self) -> list[Clause]:
        for pre in PREAMBLES:
            words = [t.lower for t in self.toks[: len(pre)]]
            if tuple(words) == pre and len(self.toks) > len(pre):
                self.i = len(pre)
                break
        clauses = [self.clause()]
        while not self.at_end():
            if not self.is_conj(self.peek()):
                self.fail(f"unexpected token {self.peek().text!r}")
            while self.is_conj(self.peek()):
                self.take()
            clauses.append(self.clause())
        return clauses

    def clause(self) -> Clause:
        subjects, extra = self.np_list(stop_before_clause=False)
        c = Clause(subjects=subjects, extra=extra)
        if self.peek() is not None and self.peek().kind == "COMMA" and self.starts_tail(self.peek(1)):
            self.take()
        if self.is_word(self.peek(), RELATIVES):
            self.take()
        self.tail(c)
        self.adjuncts(c)
        return c

    def tail(self, c: Clause) -> None:
        t = self.peek()
        if t is None:
            self.fail("clause has no predicate")
        if self.is_word(t, READING_VERBS):
            self.take()
            c.pairs.append(("reads", self.literal()))
            return
        if self.is_word(t, COPULAS):
            self.take()
            nxt = self.peek()
            if nxt is None:
                self.fail("copula without complement")
            if self.is_word(nxt, READING_VERBS) or self.is_verb(nxt):
                self.tail(c)
                return
            if nxt.kind == "PREP":
                return  # "is on a table": the adjunct loop handles it
            objs = self.obj_list(c)
            c.pairs.extend(("is", o) for o in objs)
            return
        if self.is_verb(t):
            verb = self.take().lower
            verb = POSSESSION_VERBS.get(verb, verb)
            run: list[Token] = []
            while self.peek() is not None and (self.peek().kind == "PREP" or self.is_word(self.peek(), PARTICLES)):
                run.append(self.take())
            if self.is_word(self.peek(), READING_VERBS | COPULAS):
                self.fail(f"unexpected {self.peek().text!r} after verb")
            if self.peek() is not None and self.peek().kind == "QUOTE":
                predicate = " ".join([verb] + ([run[-1].lower] if run else []))
                c.pairs.append((predicate, NounPhrase(literal=self.take().text)))
                return
            has_object = self.peek() is not None and self.peek().kind == "WORD" and not self.is_conj(self.peek())
            if not has_object:
                if run:
                    self.fail(f"preposition {run[-1].text!r} without object")
                # intransitive: the verb becomes a state of the subject
                c.pairs.append(("is", NounPhrase(head=verb)))
                return
            predicate = " ".join([verb] + ([run[-1].lower] if run else []))
            for o in self.obj_list(c):
                c.pairs.append((predicate, o))
            return
        if t.kind == "PREP":
            return
        self.fail(f"expected a predicate, found {t.text!r}")

    def adjuncts(self, c: Clause) -> None:
        while self.peek() is not None and self.peek().kind == "PREP":
            prep = self.take().lower
            if self.peek() is None or self.peek().kind not in ("WORD", "QUOTE") or self.is_conj(self.peek()):
                self.fail(f"preposition {prep!r} without object")
            for o in self.obj_list(c):
                c.pairs.append((prep, o))
        if not c.pairs:
            self.fail("clause has no predicate")

    def literal(self) -> NounPhrase:
        t = self.peek()
        if t is not None and t.kind == "QUOTE":
            self.take()
            if not t.text:
                self.fail("empty quoted literal")
            return NounPhrase(literal=t.text)
        words = []
        while self.peek() is not None and self.peek().kind == "WORD" and not self.is_conj(self.peek()):
            words.append(self.take().text)
        if not words:
            self.fail("reading verb without text")
        return NounPhrase(literal=" ".join(words))

    def obj_list(self, c: Clause) -> list[NounPhrase]:
        objs, extra = self.np_list(stop_before_clause=True, clause=c)
        c.extra.extend(extra)
        return objs

    def np_list(self, stop_before_clause: bool, clause: Clause | None = None):
        first, extra = self.np()
        nps = [first]
        # a relative clause right after an object attaches to that object
        if stop_before_clause and self.is_word(self.peek(), RELATIVES):
            self.take()
            sub = Clause(subjects=[first])
            self.tail(sub)
            self.adjuncts_for_relative(sub)
            extra.extend(_expand(sub))
        while self.is_conj(self.peek()):
            save = self.i
            while self.is_conj(self.peek()):
                self.take()
            t = self.peek()
            if t is None or t.kind not in ("WORD", "QUOTE") or self.starts_tail(t):
                self.i = save
                break
            nxt_np, nxt_extra = self.np()
            if stop_before_clause and not (self.at_end() or self.is_conj(self.peek())):
                # the conjunct begins a new clause
                self.i = save
                break
            nps.append(nxt_np)
            extra.extend(nxt_extra)
        return nps, extra

    def adjuncts_for_relative(self, sub: Clause) -> None:
        if not sub.pairs:
            self.adjuncts(sub)

    def np(self) -> tuple[NounPhrase, list[tuple[NounPhrase, str, NounPhrase]]]:
        t = self.peek()
        if t is None:
            self.fail("expected a noun phrase")
        if t.kind == "QUOTE":
            self.take()
            return NounPhrase(literal=t.text), []
        words: list[str] = []
        extra: list[tuple[NounPhrase, str, NounPhrase]] = []
        possessor: NounPhrase | None = None
        while True:
            t = self.peek()
            if t is None or t.kind != "WORD":
                break
            w = t.lower
            if w in NEGATIONS or w.endswith("n't"):
                self.fail("negation is not supported")
            if w in CONJUNCTIONS or w in RELATIVES or w in COPULAS:
                break
            has_content = any(x not in ARTICLES and parse_numeral(x) is None for x in words)
            if has_content and (self.is_verb(t) or w in READING_VERBS):
                break
            if words and w in ARTICLES:
                self.fail(f"unexpected article {t.text!r} inside a noun phrase")
            self.take()
            if w.endswith("'s") and len(w) > 2:
                possessor = canonicalize(" ".join(words + [w[:-2]]))
                if not possessor.head:
                    self.fail("possessive without a noun")
                words = []
                continue
            words.append(w)
        if not words:
            self.fail("expected a noun phrase")
        np_ = canonicalize(" ".join(words))
        if not np_.head:
            self.fail(f"noun phrase {' '.join(words)!r} has no head noun")
        if possessor is not None:
            extra.append((possessor, "with", np_))
        return np_, extra


def _expand(c: Clause) -> list[tuple[NounPhrase, str, NounPhrase]]:
    out = list(c.extra)
    for s in c.subjects:
        for pred, o in c.pairs:
            out.append((s, pred, o))
    return out


def parse_query(q: QueryText | str) -> Specification:
    """Parse a query with the clause grammar. Raises :class:`ParseError`."""
    if isinstance(q, str):
        q = QueryText(q)
    if q.errors():
        raise ParseError("; ".join(q.errors()))
    tokens = tokenize(q.raw)
    if not tokens:
        raise ParseError("no tokens in query")
    clauses = _Parser(tokens).query()
    triples: list[tuple[NounPhrase, str, NounPhrase]] = []
    for c in clauses:
        # subject-level triplets first, then those found inside objects
        main = [(s, p, o) for s in c.subjects for p, o in c.pairs]
        triples.extend(_order_clause(c, main))
    triplets = tuple(Triplet(i, s, p, o) for i, (s, p, o) in enumerate(triples))
    return Specification(query=q, triplets=triplets, source=Source.GRAMMAR)


def _order_clause(c: Clause, main):
    # possessive/relative triplets go right after the clause's main triplets
    return main + c.extra


def composite_specification(q: QueryText | str) -> Specification:
    """Single whole-query triplet used when the grammar rejects a query."""
    if isinstance(q, str):
        q = QueryText(q)
    if q.errors():
        raise ParseError("; ".join(q.errors()))
    phrase = " ".join(re.sub(r"[^\w\s'-]", " ", q.raw.lower()).split())
    t = Triplet(0, NounPhrase(head=phrase), "depicts", NounPhrase(literal=q.raw.strip()))
    return Specification(query=q, triplets=(t,), source=Source.GRAMMAR)


def parse_or_fallback(q: QueryText | str, fallback_composite: bool = False) -> Specification:
    try:
        return parse_query(q)
    except ParseError:
        if not fallback_composite:
            raise
        return composite_specification(q)


def ingest_triplets(data: bytes | str) -> Specification:
    """Load an externally produced specification and validate it."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedInput(f"invalid JSON: {e}") from None
    spec = spec_from_dict(doc, source=Source.EXTERNAL_JSON)
    errors = validate_specification(spec)
    if errors:
        raise InvalidSpecification(errors)
    return spec
