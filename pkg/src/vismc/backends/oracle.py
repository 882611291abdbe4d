"""Deterministic perception backend answering from scene annotations."""

from __future__ import annotations

import re
from typing import Mapping

from ..errors import UnknownImage
from ..geometry import iou
from ..model import Box, singularize
from .scene import SceneDocument, SceneObject

AUXILIARIES = frozenset({"is", "are", "was", "were", "be", "being", "been", "a", "an", "the"})

_WORD = re.compile(r"[a-z0-9]+(?:'[a-z]+)?")


def words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def fold_verb(word: str) -> str:
    """Collapse inflections so that ride / rides / riding / rode-less forms agree."""
    w = word
    if w.endswith("ing") and len(w) > 4:
        w = w[:-3]
    elif w.endswith("ied") and len(w) > 4:
        w = w[:-3] + "y"
    elif w.endswith("ed") and len(w) > 4 and not w.endswith("eed"):
        w = w[:-2]
    elif w.endswith("ies") and len(w) > 4:
        w = w[:-3] + "y"
    elif w.endswith("es") and w[:-2].endswith(("sh", "ch", "ss", "x", "z")):
        w = w[:-2]
    elif w.endswith("s") and not w.endswith("ss") and len(w) > 3:
        w = w[:-1]
    if w.endswith("e") and len(w) > 3:
        w = w[:-1]
    if len(w) > 3 and w[-1] == w[-2] and w[-1] not in "aeiousl":
        w = w[:-1]
    return w


def fold_predicate(text: str) -> tuple[str, ...]:
    return tuple(fold_verb(w) for w in words(text) if w not in AUXILIARIES)


def _noun_key(tokens: list[str]) -> tuple[str, ...]:
    if not tokens:
        return ()
    return (*tokens[:-1], singularize(tokens[-1]))


class OracleBackend:
    """Answers detect/read queries by matching against SceneDocuments.

    Query forms understood by :meth:`detect`:

    * a category or synonym (``"horse"``)
    * attribute-qualified (``"white bathtub"``): leading words must all be
      attributes of an object whose category ends the query
    * composite action (``"man riding horse"``): subject phrase, verb
      phrase, object phrase matching an annotated relation; returns the
      subject boxes
    """

    has_ocr = True

    def __init__(self, corpus: Mapping[str, SceneDocument]):
        self.corpus = dict(corpus)

    def scene(self, image_id: str) -> SceneDocument:
        try:
            return self.corpus[image_id]
        except KeyError:
            raise UnknownImage(image_id) from None

    def detect(self, image_id: str, query: str, threshold: float = 0.0) -> list[Box]:
        return oracle_detect(self.scene(image_id), query)

    def read_text(self, image_id: str, region: Box) -> list[str]:
        return oracle_read_text(self.scene(image_id), region)

    def image_ids(self) -> list[str]:
        return sorted(self.corpus)


def _names(obj: SceneObject) -> list[tuple[str, ...]]:
    return [_noun_key(words(n)) for n in (obj.category, *obj.synonyms)]


def phrase_matches(obj: SceneObject, tokens: list[str]) -> bool:
    """Whether ``tokens`` name the object, optionally with attribute qualifiers."""
    key = _noun_key(tokens)
    if not key:
        return False
    attrs = {w for a in obj.attributes for w in words(a)}
    for name in _names(obj):
        if not name or len(name) > len(key):
            continue
        if key[len(key) - len(name):] != name:
            continue
        qualifiers = key[: len(key) - len(name)]
        if all(q in attrs for q in qualifiers):
            return True
    return False


def oracle_detect(scene: SceneDocument, query: str) -> list[Box]:
    tokens = words(query)
    hits: dict[int, SceneObject] = {}
    for obj in scene.objects:
        if phrase_matches(obj, tokens):
            hits[obj.id] = obj
    for rel in scene.relations:
        subj = scene.object(rel.subject_id)
        if subj.id in hits:
            continue
        target = fold_predicate(rel.predicate)
        if not target:
            continue
        obj = scene.object(rel.object_id)
        for i in range(1, len(tokens) - 1):
            if not phrase_matches(subj, tokens[:i]):
                continue
            for j in range(i + 1, len(tokens)):
                if fold_predicate(" ".join(tokens[i:j])) == target and phrase_matches(obj, tokens[j:]):
                    hits[subj.id] = subj
                    break
            if subj.id in hits:
                break
    ordered = sorted(hits.values(), key=lambda o: o.id)
    return [
        Box(o.bbox.x0, o.bbox.y0, o.bbox.x1, o.bbox.y1, score=1.0, label=o.category)
        for o in ordered
    ]


def oracle_read_text(scene: SceneDocument, region: Box) -> list[str]:
    return [
        o.text for o in scene.objects
        if o.text is not None and iou(o.bbox.coords, region.coords) > 0
    ]
