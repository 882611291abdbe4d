"""Acceptance checks. Each test prints one PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for the summary alone.
"""

from __future__ import annotations

import json
import random
import socket
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import ACCEPTANCE_LINES  # noqa: E402
from oracles import relation_holds, rerank_reference, satisfying_scenes, triplet_holds  # noqa: E402

from vismc import geometry  # noqa: E402
from vismc.backends import MockDetectorServer, OracleBackend, RemoteBackend, RemoteConfig, load_corpus  # noqa: E402
from vismc.cli import main as cli_main  # noqa: E402
from vismc.data import CASES, CORPUS_DIR, QUERIES  # noqa: E402
from vismc.dsl import ingest_routine  # noqa: E402
from vismc.errors import ProtocolError, StaticCheckError, SynthesisError, TransportError  # noqa: E402
from vismc.evaluation import EvalCase, Split, build_splits, recall_at_k  # noqa: E402
from vismc.io import read_jsonl  # noqa: E402
from vismc.model import ErrorClass, Outcome, TruthScore, spec_from_dict  # noqa: E402
from vismc.parser import parse_query  # noqa: E402
from vismc.pipeline import QueryItem, ResultStore, all_results, plan, resume, run  # noqa: E402
from vismc.ranking import BaselineRanking, rerank  # noqa: E402
from vismc.synth import DEFAULT_LEXICON, classify_predicate, synthesize  # noqa: E402
from vismc.vm import VmConfig, execute  # noqa: E402


def report(n: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _load():
    corpus = load_corpus(CORPUS_DIR)
    queries = [QueryItem.from_dict(d) for d in read_jsonl(QUERIES)]
    cases = {d["query_id"]: d for d in read_jsonl(CASES)}
    return corpus, queries, cases


def _spec(item: QueryItem):
    if item.triplets is not None:
        return spec_from_dict({"query": item.text, "triplets": list(item.triplets)})
    return parse_query(item.text)


# -- 1 -------------------------------------------------------------------------

def test_rerank_arithmetic():
    t0 = time.perf_counter()
    ids = [f"img{i}" for i in range(10)]
    scores = {img: TruthScore(0, 1) for img in ids}
    scores["img0"] = TruthScore(1, 2)
    scores["img2"] = TruthScore(3, 4)
    out = rerank(BaselineRanking("q", tuple(ids)), scores)
    by_id = {e.image_id: e.rerank_score for e in out.entries}
    exact = by_id["img0"] == 5 and by_id["img2"] == 6 and out.entries[0].image_id == "img2"

    rng = random.Random(1)
    mismatches = 0
    for _ in range(1000):
        K = rng.randint(1, 20)
        base = [f"i{j}" for j in rng.sample(range(100), K)]
        ts = {}
        for img in base:
            total = rng.randint(1, 6)
            ts[img] = TruthScore(rng.randint(0, total), total)
        got = [(e.image_id, e.rerank_score) for e in rerank(BaselineRanking("q", tuple(base)), ts).entries]
        want = rerank_reference(base, {k: Fraction(v.satisfied, v.total) for k, v in ts.items()})
        mismatches += got != want
    elapsed = time.perf_counter() - t0
    report(1, "rerank scores exact on the worked example and 1000 random cases",
           exact and mismatches == 0 and elapsed < 1.0, f"{mismatches} mismatches, {elapsed:.2f}s")


# -- 2 -------------------------------------------------------------------------

def test_satisfaction_semantics():
    t0 = time.perf_counter()
    corpus, queries, _ = _load()
    backend = OracleBackend(corpus)
    classes = set()
    disagreements = []
    for item in queries:
        spec = _spec(item)
        programs = [synthesize(t) for t in spec.triplets]
        for t in spec.triplets:
            pc = classify_predicate(t)
            classes.add({"spatial": "Spatial", "reading": "Reading", "existence": "Existence",
                         "attribute": "Attribute", "action": "ActionComposite"}[pc.base])
            if pc.counting:
                classes.add("Counting")
        for image, scene in corpus.items():
            verdicts = [execute(p, image, backend) for p in programs]
            for t, v in zip(spec.triplets, verdicts):
                expected = triplet_holds(scene, t, DEFAULT_LEXICON)
                if (v.outcome is Outcome.SATISFIED) != expected:
                    disagreements.append((item.query_id, image, t.id))
            score_one = all(v.outcome is Outcome.SATISFIED for v in verdicts)
            if score_one != all(triplet_holds(scene, t, DEFAULT_LEXICON) for t in spec.triplets):
                disagreements.append((item.query_id, image, "score"))
    elapsed = time.perf_counter() - t0
    required = {"Spatial", "Reading", "Counting", "Attribute", "Existence", "ActionComposite"}
    ok = (not disagreements and len(corpus) >= 20 and len(queries) >= 15 and required <= classes
          and elapsed < 10.0)
    report(2, "verdicts agree with brute-force witness enumeration", ok,
           f"{len(corpus)} scenes, {len(queries)} queries, {len(disagreements)} disagreements, {elapsed:.2f}s")


# -- 3 -------------------------------------------------------------------------

def test_end_to_end_retrieval(tmp_path):
    t0 = time.perf_counter()
    corpus, queries, cases = _load()
    p = plan(queries, corpus)
    store = ResultStore(tmp_path / "store")
    run(p, OracleBackend(corpus), store, light=2, heavy=4)
    results = all_results(store, p)
    wrong = []
    ambiguous = []
    for item in queries:
        sat = satisfying_scenes(corpus, _spec(item), DEFAULT_LEXICON)
        truth = cases[item.query_id]["ground_truth"]
        hit = recall_at_k(results[item.query_id].ranking, truth, 1)
        if len(sat) == 1 and sat[0] == truth:
            if hit != 1:
                wrong.append(item.query_id)
        else:
            ambiguous.append(item.query_id)
            if hit == 1:
                wrong.append(item.query_id)
    elapsed = time.perf_counter() - t0
    unique = len(queries) - len(ambiguous)
    report(3, "Recall@1 = 1 on uniquely satisfiable queries, < 1 exactly on ambiguous ones",
           not wrong and unique > 0 and elapsed < 30.0,
           f"{unique} unique, ambiguous={ambiguous}, wrong={wrong}, {elapsed:.2f}s")


# -- 4 -------------------------------------------------------------------------

class _NoOcr(OracleBackend):
    has_ocr = False


def _dead_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def test_error_taxonomy(tmp_path):
    corpus, _, _ = _load()
    found = {}

    # malformed triplet: caught at synthesis, surfaces in the run's verdict stream
    bad = QueryItem("bad", "snow is under", ({"id": 0, "s": {"head": "snow"}, "p": "is", "o": {"head": "under"}},))
    try:
        synthesize(_spec(bad).triplets[0])
        raised = False
    except SynthesisError:
        raised = True
    p = plan([bad], corpus)
    store = ResultStore(tmp_path / "s1")
    run(p, OracleBackend(corpus), store)
    vs = [v for _, v in store.items("verdicts")]
    found["BadTriplet"] = raised and all(v["error"] == "BadTriplet" for v in vs) and len(vs) == len(corpus)

    # routine failing static checks: rejected at ingest, still reported per image
    routine = {"triplet_id": 0, "instructions": [{"op": "NONEMPTY", "src": "r5", "out": "r0"}]}
    try:
        ingest_routine(json.dumps(routine))
        rejected = False
    except StaticCheckError:
        rejected = True
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"query": "a cat", "triplets": [
        {"id": 0, "s": {"head": "cat"}, "p": "on", "o": {"head": "table"}}]}))
    routines_path = tmp_path / "routines.json"
    routines_path.write_text(json.dumps([routine]))
    verdicts_path = tmp_path / "verdicts.jsonl"
    code = cli_main(["verify", "--spec", str(spec_path), "--routines", str(routines_path),
                     "--corpus", str(CORPUS_DIR), "--images", "v13_cat_table", "-o", str(verdicts_path)])
    stream = [json.loads(line) for line in verdicts_path.read_text().splitlines()]
    found["BadRoutineGeneration"] = rejected and code == 0 and [v["error"] for v in stream] == ["BadRoutineGeneration"]

    # OCR-less backend asked to read
    prog = synthesize(parse_query("a sign that reads Norfolk").triplets[0])
    v = execute(prog, "v04_sign_norfolk", _NoOcr(corpus))
    found["BadRoutineExecution"] = v.outcome is Outcome.INDETERMINATE and v.error_class is ErrorClass.BAD_ROUTINE_EXECUTION

    # dead remote endpoint
    remote = RemoteBackend(f"http://127.0.0.1:{_dead_port()}", RemoteConfig(retries=1, timeout_ms=500, backoff_ms=5))
    q = QueryItem("cat", "a cat on a table")
    p = plan([q], ["v13_cat_table", "v14_dog_chair"], backend_id="remote")
    store = ResultStore(tmp_path / "s2")
    run(p, remote, store)
    vs = [v for _, v in store.items("verdicts")]
    found["BackendFailure"] = bool(vs) and all(
        v["outcome"] == "Indeterminate" and v["error"] == "BackendFailure" for v in vs)

    missing = [k for k, ok in found.items() if not ok]
    report(4, "each error class surfaces in the verdict stream", not missing, f"failed: {missing}" if missing else
           ", ".join(found))


# -- 5 -------------------------------------------------------------------------

class _Interrupt(Exception):
    pass


def test_scheduler_determinism(tmp_path):
    corpus, queries, _ = _load()
    backend = OracleBackend(corpus)
    p = plan(queries, corpus)
    manifests = {}
    snapshots = {}
    for light, heavy in ((1, 1), (2, 4), (8, 8)):
        store = ResultStore(tmp_path / f"pool{light}x{heavy}")
        run(p, backend, store, light=light, heavy=heavy)
        manifests[(light, heavy)] = store.manifest_bytes()
        snapshots[(light, heavy)] = store.snapshot()
    same_pools = len(set(manifests.values())) == 1

    fresh = manifests[(1, 1)]
    total = sum(len(v) for v in snapshots[(1, 1)].values())
    rng = random.Random(2024)
    root = tmp_path / "interrupted"
    points = []
    for _ in range(3):
        store = ResultStore(root)
        remaining = total - sum(store.count(t) for t in ("specs", "routines", "verdicts"))
        point = rng.randint(1, remaining - 1)
        points.append(point)
        seen = [0]

        def progress(task, rep, limit=point):
            seen[0] += 1
            if seen[0] >= limit:
                raise _Interrupt()

        try:
            if store.exists():
                resume(store, p, backend, light=2, heavy=3, progress=progress)
            else:
                run(p, backend, store, light=2, heavy=3, progress=progress)
        except _Interrupt:
            pass
    store = ResultStore(root)
    resume(store, p, backend, light=2, heavy=3)
    resumed_equal = store.manifest_bytes() == fresh and ResultStore(root).snapshot() == snapshots[(1, 1)]
    report(5, "manifests byte-identical across pool sizes and after 3 interrupts",
           same_pools and resumed_equal and len(points) == 3, f"interrupts at {points}")


# -- 6 -------------------------------------------------------------------------

def test_split_protocol():
    rng = random.Random(6)
    ranks = list(range(1, 101))
    rng.shuffle(ranks)
    ids = [f"case{i:03d}" for i in range(100)]
    cases = [EvalCase(q, "", "g", ("g", "x")) for q in ids]
    baseline = dict(zip(ids, ranks))
    splits = build_splits(cases, baseline)
    easy = set(splits.cases(Split.EASY))
    hard = set(splits.cases(Split.HARD))
    # by hand: ranks 1..25 are the top quartile, 76..100 the bottom
    hand_easy = {q for q, r in baseline.items() if r <= 25}
    hand_hard = {q for q, r in baseline.items() if r >= 76}
    splits_ok = len(easy) == 25 and len(hard) == 25 and easy == hand_easy and hard == hand_hard

    monotone = True
    for _ in range(1000):
        n = rng.randint(1, 30)
        ranking = [f"i{j}" for j in rng.sample(range(40), n)]
        truth = f"i{rng.randrange(40)}"
        values = [recall_at_k(ranking, truth, k) for k in range(1, 41)]
        monotone &= all(a <= b for a, b in zip(values, values[1:]))
    report(6, "25 Easy / 25 Hard from 100 cases; recall@k monotone in k", splits_ok and monotone,
           f"easy={len(easy)}, hard={len(hard)}")


# -- 7 -------------------------------------------------------------------------

def _detect_queries(queries):
    out = set()
    for item in queries:
        for t in _spec(item).triplets:
            out.update(i.query for i in synthesize(t).instructions if i.op == "DETECT")
    return sorted(out)


def test_wire_protocol(tmp_path):
    corpus, queries, _ = _load()
    oracle = OracleBackend(corpus)
    phrases = _detect_queries(queries)
    mismatches = 0
    pairs = 0
    with MockDetectorServer(corpus) as server:
        client = RemoteBackend(server.url, RemoteConfig(retries=0, timeout_ms=5000))
        for image in sorted(corpus):
            remote = client.detect_batch(image, phrases)
            for phrase, got in zip(phrases, remote):
                want = oracle.detect(image, phrase)
                pairs += 1
                if len(got) != len(want) or any(
                    max(abs(x - y) for x, y in zip(g.coords, w.coords)) > 1e-9 or g.label != w.label
                    for g, w in zip(got, want)
                ):
                    mismatches += 1
            for obj in corpus[image].objects:
                if obj.text is not None and client.read_text(image, obj.bbox) != oracle.read_text(image, obj.bbox):
                    mismatches += 1

        faults = {}
        cfg = RemoteConfig(retries=2, timeout_ms=3000, backoff_ms=10, attempt_timeout_ms=200)
        flaky = RemoteBackend(server.url, cfg)
        want = oracle.detect("v02_man_horse", "horse")
        server.add_faults(["drop"])
        faults["drop"] = flaky.detect("v02_man_horse", "horse") == want
        server.add_faults(["delay:600"])
        t0 = time.perf_counter()
        faults["delay"] = flaky.detect("v02_man_horse", "horse") == want and time.perf_counter() - t0 < 1.0
        server.add_faults(["malformed"])
        try:
            flaky.detect("v02_man_horse", "horse")
            faults["malformed"] = False
        except ProtocolError:
            faults["malformed"] = True
        server.add_faults(["drop"] * 3)
        try:
            flaky.detect("v02_man_horse", "horse")
            faults["exhausted"] = False
        except TransportError:
            faults["exhausted"] = True
        server.add_faults(["malformed"])
        v = execute(synthesize(parse_query("a cat on a table").triplets[0]), "v13_cat_table", flaky)
        faults["verdict"] = v.outcome is Outcome.INDETERMINATE and v.error_class is ErrorClass.BACKEND_FAILURE
    ok = mismatches == 0 and all(faults.values())
    report(7, "mock server and remote client match the in-process oracle; faults handled", ok,
           f"{pairs} detect pairs, {mismatches} mismatches, faults={faults}")


# -- 8 -------------------------------------------------------------------------

def _random_boxes(rng: np.random.Generator, n: int) -> np.ndarray:
    xy = rng.random((n, 2)) * 0.9
    wh = rng.random((n, 2)) * (1.0 - xy) * 0.9 + 1e-3
    return np.column_stack([xy, np.minimum(xy + wh, 1.0)])


@pytest.mark.parametrize("backend", geometry.available_backends())
def test_relation_geometry(backend):
    rng = np.random.default_rng(8)
    a = _random_boxes(rng, 100)
    b = _random_boxes(rng, 100)  # 100 x 100 = 10,000 ordered pairs
    cfg = VmConfig()
    M = {rel: geometry.relation_matrix(rel, a, b, cfg, backend=backend) for rel in geometry.RELATIONS}
    Mt = {rel: geometry.relation_matrix(rel, b, a, cfg, backend=backend) for rel in geometry.RELATIONS}
    duality = (np.array_equal(M["left_of"], Mt["right_of"].T) and np.array_equal(M["right_of"], Mt["left_of"].T)
               and np.array_equal(M["above"], Mt["below"].T) and np.array_equal(M["below"], Mt["above"].T))

    def subset(x, y):
        return not np.any(x & ~y)

    monotone = True
    fracs = [0.05, 0.1, 0.25, 0.5, 0.75]
    for lo, hi in zip(fracs, fracs[1:]):
        c_lo = VmConfig(near_frac=lo, min_overlap=lo, inside_frac=lo, contact_tol=lo / 5)
        c_hi = VmConfig(near_frac=hi, min_overlap=hi, inside_frac=hi, contact_tol=hi / 5)
        m_lo = {r: geometry.relation_matrix(r, a, b, c_lo, backend=backend) for r in ("near", "inside", "overlap_or_near")}
        m_hi = {r: geometry.relation_matrix(r, a, b, c_hi, backend=backend) for r in ("near", "inside", "overlap_or_near")}
        monotone &= subset(m_lo["near"], m_hi["near"]) and subset(m_hi["inside"], m_lo["inside"])
        monotone &= subset(m_lo["overlap_or_near"], m_hi["overlap_or_near"])
        # min_overlap tightens "on"; contact_tol loosens it
        on_strict = geometry.relation_matrix("on", a, b, VmConfig(min_overlap=hi), backend=backend)
        on_loose = geometry.relation_matrix("on", a, b, VmConfig(min_overlap=lo), backend=backend)
        on_tol_lo = geometry.relation_matrix("on", a, b, VmConfig(contact_tol=lo / 5), backend=backend)
        on_tol_hi = geometry.relation_matrix("on", a, b, VmConfig(contact_tol=hi / 5), backend=backend)
        monotone &= subset(on_strict, on_loose) and subset(on_tol_lo, on_tol_hi)

    example = not geometry.relation_matrix("near", [(0.05, 0.05, 0.15, 0.15)], [(0.85, 0.85, 0.95, 0.95)], cfg,
                                           backend=backend)[0, 0]
    by_hand = all(
        bool(M["near"][i, j]) == relation_holds("near", tuple(a[i]), tuple(b[j]))
        for i in range(100) for j in range(100)
    )
    report(8, f"relation duality, threshold monotonicity and the near example [{backend}]",
           duality and monotone and example and by_hand)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
