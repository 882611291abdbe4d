"""Regenerate the bundled synthetic corpus under src/vismc/data/corpus.

Each scene is a hand-placed layout; the ``decoy`` scenes share objects with
a query's target so that only geometry, counts or annotations separate
them. Ambiguous queries have two satisfying scenes, and the one listed as
ground truth sorts after its twin.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "vismc" / "data" / "corpus"


def obj(category, bbox, **kw):
    return {"category": category, "bbox": bbox, **kw}


# image_id -> (objects, relations as (subject index, predicate, object index))
SCENES = {
    "v00_pizza_plate": ([obj("pizza", [0.3, 0.3, 0.7, 0.55]), obj("plate", [0.2, 0.45, 0.8, 0.85])], []),
    "v01_dog_couch": ([obj("couch", [0.1, 0.5, 0.9, 0.9], synonyms=["sofa"]), obj("dog", [0.3, 0.35, 0.55, 0.6])], []),
    "v02_man_horse": (
        [obj("horse", [0.2, 0.4, 0.8, 0.9]), obj("man", [0.35, 0.15, 0.6, 0.6], synonyms=["person"]),
         obj("tree", [0.85, 0.05, 1.0, 0.6])],
        [(1, "riding", 0)],
    ),
    "v03_man_beside_horse": (
        [obj("man", [0.05, 0.3, 0.2, 0.9], synonyms=["person"]), obj("horse", [0.4, 0.4, 0.95, 0.9])],
        [(0, "standing next to", 1)],
    ),
    "v04_sign_norfolk": (
        [obj("sign", [0.4, 0.1, 0.6, 0.3], text="Norfolk"), obj("pole", [0.48, 0.3, 0.52, 0.95])], []),
    "v05_sign_boston": (
        [obj("sign", [0.1, 0.1, 0.35, 0.25], text="Boston"), obj("street", [0.0, 0.6, 1.0, 1.0], synonyms=["road"])], []),
    "v06_lake_two_boats": (
        [obj("lake", [0.0, 0.4, 1.0, 1.0]), obj("boat", [0.1, 0.45, 0.3, 0.6]), obj("boat", [0.6, 0.5, 0.8, 0.65])], []),
    "v07_lake_one_boat": ([obj("lake", [0.0, 0.4, 1.0, 1.0]), obj("boat", [0.4, 0.5, 0.6, 0.62])], []),
    "v08_white_bathtub": (
        [obj("bathtub", [0.1, 0.5, 0.7, 0.9], synonyms=["tub"], attributes=["white"]),
         obj("sink", [0.75, 0.4, 0.95, 0.55], attributes=["white"])], []),
    "v09_blue_bathtub": ([obj("bathtub", [0.2, 0.5, 0.8, 0.9], synonyms=["tub"], attributes=["blue"])], []),
    "v10_bench_shore": (
        [obj("shore", [0.0, 0.6, 1.0, 1.0], synonyms=["beach"]), obj("bench", [0.35, 0.55, 0.6, 0.75]),
         obj("sea", [0.0, 0.3, 1.0, 0.6], synonyms=["water"])], []),
    "v11_horses_building": (
        [obj("field", [0.0, 0.4, 1.0, 1.0], attributes=["green"]), obj("horse", [0.1, 0.5, 0.3, 0.75]),
         obj("horse", [0.45, 0.45, 0.65, 0.7]), obj("building", [0.4, 0.15, 0.8, 0.5], attributes=["brick"])],
        [(1, "standing in", 0), (2, "standing in", 0)],
    ),
    "v12_horses_no_building": (
        [obj("field", [0.0, 0.3, 1.0, 1.0]), obj("horse", [0.1, 0.5, 0.3, 0.75]), obj("horse", [0.6, 0.5, 0.8, 0.75])],
        [],
    ),
    "v13_cat_table": ([obj("table", [0.2, 0.5, 0.8, 0.95]), obj("cat", [0.35, 0.25, 0.6, 0.55])], []),
    "v14_dog_chair": ([obj("chair", [0.3, 0.2, 0.7, 0.6]), obj("dog", [0.35, 0.65, 0.6, 0.9])], []),
    "v15_dirt_road": (
        [obj("road", [0.2, 0.4, 0.8, 1.0], attributes=["dirt"]), obj("fence", [0.0, 0.5, 0.15, 0.8])], []),
    "v16_paved_road": ([obj("road", [0.0, 0.5, 1.0, 1.0], attributes=["paved"]), obj("car", [0.3, 0.55, 0.5, 0.7])], []),
    "v17_cup_laptop": (
        [obj("cup", [0.1, 0.5, 0.2, 0.65], synonyms=["mug"]), obj("laptop", [0.4, 0.4, 0.8, 0.7]),
         obj("desk", [0.0, 0.6, 1.0, 1.0], synonyms=["table"])], []),
    "v18_woman_umbrella": (
        [obj("woman", [0.3, 0.3, 0.6, 0.95], synonyms=["person"]), obj("umbrella", [0.2, 0.05, 0.7, 0.35])],
        [(0, "holding", 1)],
    ),
    "v19_boxed_meal": (
        [obj("meal", [0.05, 0.05, 0.95, 0.95], attributes=["boxed"]),
         obj("roll", [0.1, 0.2, 0.45, 0.5], attributes=["sandwich"]),
         obj("juice", [0.55, 0.15, 0.7, 0.5], attributes=["orange"]),
         obj("yogurt", [0.6, 0.6, 0.85, 0.85], attributes=["strawberry"])], []),
    "v20_people_bicycles": (
        [obj("person", [0.1, 0.2, 0.3, 0.7]), obj("bicycle", [0.05, 0.5, 0.35, 0.9], synonyms=["bike"]),
         obj("person", [0.6, 0.2, 0.8, 0.7]), obj("bicycle", [0.55, 0.5, 0.85, 0.9], synonyms=["bike"])],
        [(0, "riding", 1), (2, "riding", 3)],
    ),
    "v21_stop_sign_car": (
        [obj("stop sign", [0.45, 0.05, 0.6, 0.25], text="STOP"), obj("car", [0.3, 0.5, 0.8, 0.8])], []),
    "v22_clock_12": (
        [obj("clock", [0.4, 0.1, 0.6, 0.3], text="12"), obj("tower", [0.35, 0.0, 0.65, 1.0], attributes=["stone"])], []),
    "v23_sheep_field": (
        [obj("field", [0.0, 0.35, 1.0, 1.0]), obj("sheep", [0.1, 0.5, 0.25, 0.65]),
         obj("sheep", [0.4, 0.55, 0.55, 0.7]), obj("sheep", [0.7, 0.6, 0.85, 0.75])], []),
    "v24_giraffe_tree": (
        [obj("giraffe", [0.3, 0.2, 0.6, 0.95]), obj("tree", [0.5, 0.0, 0.95, 0.7])],
        [(0, "eating from", 1)],
    ),
    "v25_red_bus": ([obj("bus", [0.1, 0.3, 0.9, 0.85], attributes=["red", "white"])], []),
    "v26_dog_sofa": ([obj("couch", [0.2, 0.55, 0.95, 0.95], synonyms=["sofa"]), obj("dog", [0.5, 0.4, 0.75, 0.65])], []),
    "v27_man_surfboard": (
        [obj("man", [0.4, 0.2, 0.6, 0.9], synonyms=["person"]), obj("surfboard", [0.55, 0.4, 0.7, 0.95])], []),
    "v28_pizza_plate": ([obj("pizza", [0.25, 0.25, 0.65, 0.5]), obj("plate", [0.15, 0.4, 0.75, 0.8])], []),
    "v29_horse_building": (
        [obj("field", [0.0, 0.4, 1.0, 1.0]), obj("horse", [0.4, 0.5, 0.6, 0.75]),
         obj("building", [0.3, 0.1, 0.7, 0.45], attributes=["brick"])], []),
}

# query_id, text, ground truth; optional explicit triplets
QUERIES = [
    ("q01", "man riding horse", "v02_man_horse"),
    ("q02", "a sign that reads Norfolk", "v04_sign_norfolk"),
    ("q03", "two boats on a lake", "v06_lake_two_boats"),
    ("q04", "the bathtub is white", "v08_white_bathtub"),
    ("q05", "a bench by the shore", "v10_bench_shore"),
    ("q06", "two horses standing in a field near a brick building", "v11_horses_building"),
    ("q07", "a cat on a table", "v13_cat_table"),
    ("q08", "a dog under a chair", "v14_dog_chair"),
    ("q09", "a road made of dirt", "v15_dirt_road"),
    ("q10", "a cup left of a laptop", "v17_cup_laptop"),
    ("q11", "a woman holding an umbrella", "v18_woman_umbrella"),
    ("q12", "a boxed meal of sandwich roll, orange juice and strawberry yogurt", "v19_boxed_meal"),
    ("q13", "people riding bicycles", "v20_people_bicycles"),
    ("q14", "a stop sign above a car", "v21_stop_sign_car"),
    ("q15", "a clock that says 12", "v22_clock_12"),
    ("q16", "three sheep in a field", "v23_sheep_field"),
    ("q17", "a giraffe eating from a tree", "v24_giraffe_tree"),
    ("q18", "the bus is red", "v25_red_bus"),
    ("q19", "a dog on a couch", "v26_dog_sofa"),
    ("q20", "a pizza on a plate", "v28_pizza_plate"),
    ("q21", "a man with a surfboard", "v27_man_surfboard"),
    ("q22", "a laptop to the right of a mug", "v17_cup_laptop",
     [{"id": 0, "s": {"head": "laptop"}, "p": "right of", "o": {"head": "mug"}}]),
]


def scene_doc(image_id, objects, relations):
    return {
        "image_id": image_id,
        "width": 640,
        "height": 480,
        "objects": [{"id": i, **o} for i, o in enumerate(objects)],
        "relations": [{"subject_id": s, "predicate": p, "object_id": o} for s, p, o in relations],
    }


def baseline(rng: random.Random, pool: list[str], truth: str, rank: int) -> list[str]:
    others = [i for i in pool if i != truth]
    rng.shuffle(others)
    return others[:rank] + [truth] + others[rank:]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.scene.json"):
        old.unlink()
    for image_id, (objects, relations) in SCENES.items():
        path = OUT / f"{image_id}.scene.json"
        path.write_text(json.dumps(scene_doc(image_id, objects, relations), indent=2) + "\n")
    pool = sorted(SCENES)
    rng = random.Random(7)
    queries, cases, base = [], [], []
    for n, (qid, text, truth, *rest) in enumerate(QUERIES):
        q = {"query_id": qid, "query": text}
        if rest:
            q["triplets"] = rest[0]
        queries.append(q)
        cases.append({"query_id": qid, "query": text, "ground_truth": truth, "pool": pool})
        base.append({"query_id": qid, "ranking": baseline(rng, pool, truth, (n * 5) % 13)})
    for name, rows in (("queries", queries), ("cases", cases), ("baseline", base)):
        (OUT / f"{name}.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
    print(f"wrote {len(SCENES)} scenes and {len(queries)} queries to {OUT}")


if __name__ == "__main__":
    main()
