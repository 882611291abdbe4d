"""Annotated scene documents (``*.scene.json``)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..errors import MalformedInput
from ..model import Box


@dataclass(frozen=True)
class SceneObject:
    id: int
    category: str
    bbox: Box
    synonyms: tuple[str, ...] = ()
    attributes: tuple[str, ...] = ()
    text: str | None = None


@dataclass(frozen=True)
class SceneRelation:
    subject_id: int
    predicate: str
    object_id: int


@dataclass(frozen=True)
class SceneDocument:
    image_id: str
    width: int
    height: int
    objects: tuple[SceneObject, ...]
    relations: tuple[SceneRelation, ...] = ()

    def object(self, object_id: int) -> SceneObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(object_id)

    def to_dict(self) -> dict:
        objs = []
        for o in self.objects:
            d: dict[str, Any] = {"id": o.id, "category": o.category, "bbox": [o.bbox.x0, o.bbox.y0, o.bbox.x1, o.bbox.y1]}
            if o.synonyms:
                d["synonyms"] = list(o.synonyms)
            if o.attributes:
                d["attributes"] = list(o.attributes)
            if o.text is not None:
                d["text"] = o.text
            objs.append(d)
        return {
            "image_id": self.image_id,
            "width": self.width,
            "height": self.height,
            "objects": objs,
            "relations": [
                {"subject_id": r.subject_id, "predicate": r.predicate, "object_id": r.object_id}
                for r in self.relations
            ],
        }


def scene_from_dict(d: Any, path: str = "$") -> SceneDocument:
    if not isinstance(d, dict):
        raise MalformedInput("scene must be an object", path)
    for key in ("image_id", "width", "height", "objects"):
        if key not in d:
            raise MalformedInput(f"missing field {key!r}", path)
    if not isinstance(d["width"], int) or not isinstance(d["height"], int) or d["width"] < 1 or d["height"] < 1:
        raise MalformedInput("width and height must be positive integers", path)
    objects = []
    seen = set()
    for i, o in enumerate(d["objects"]):
        where = f"{path}.objects[{i}]"
        if not isinstance(o, dict) or not isinstance(o.get("id"), int) or not isinstance(o.get("category"), str):
            raise MalformedInput("object needs integer id and category", where)
        if o["id"] in seen:
            raise MalformedInput(f"duplicate object id {o['id']}", where)
        seen.add(o["id"])
        bbox = o.get("bbox")
        if isinstance(bbox, list) and len(bbox) == 4:
            try:
                box = Box(*map(float, bbox), score=1.0, label=o["category"])
            except (TypeError, ValueError) as e:
                raise MalformedInput(str(e), f"{where}.bbox") from None
        else:
            box = Box.from_dict(bbox, f"{where}.bbox")
        objects.append(SceneObject(
            id=o["id"],
            category=o["category"].lower(),
            bbox=box,
            synonyms=tuple(s.lower() for s in o.get("synonyms", [])),
            attributes=tuple(a.lower() for a in o.get("attributes", [])),
            text=o.get("text"),
        ))
    relations = []
    for i, r in enumerate(d.get("relations", [])):
        where = f"{path}.relations[{i}]"
        if not isinstance(r, dict) or r.get("subject_id") not in seen or r.get("object_id") not in seen:
            raise MalformedInput("relation endpoints must name existing objects", where)
        if not isinstance(r.get("predicate"), str) or not r["predicate"].strip():
            raise MalformedInput("relation predicate must be a non-empty string", where)
        relations.append(SceneRelation(r["subject_id"], r["predicate"].lower(), r["object_id"]))
    return SceneDocument(
        image_id=str(d["image_id"]),
        width=d["width"],
        height=d["height"],
        objects=tuple(sorted(objects, key=lambda o: o.id)),
        relations=tuple(relations),
    )


def load_scene(path: str | Path) -> SceneDocument:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise MalformedInput(f"invalid JSON: {e}", str(path)) from None
    return scene_from_dict(doc, str(path))


def load_corpus(directory: str | Path) -> dict[str, SceneDocument]:
    """All ``*.scene.json`` files in a directory, keyed by image id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    corpus: dict[str, SceneDocument] = {}
    for p in sorted(directory.glob("*.scene.json")):
        scene = load_scene(p)
        if scene.image_id in corpus:
            raise MalformedInput(f"duplicate image id {scene.image_id}", str(p))
        corpus[scene.image_id] = scene
    return corpus
