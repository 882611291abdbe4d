import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vismc.dsl import check_program, ingest_routine, program_to_dict
from vismc.errors import MalformedInput, StaticCheckError, SynthesisError
from vismc.model import NounPhrase, QueryText, Specification, Triplet
from vismc.parser import parse_query
from vismc.synth import (
    DEFAULT_LEXICON, PredicateLexicon, classify_predicate, estimate_state_count, load_lexicon, synthesize,
    synthesize_all,
)


def T(s, p, o, **kw):
    return Triplet(0, s if isinstance(s, NounPhrase) else NounPhrase(s), p,
                   o if isinstance(o, NounPhrase) else NounPhrase(o), **kw)


@pytest.mark.parametrize("t,expected", [
    (T("sign", "reads", NounPhrase(literal="Norfolk")), "Reading"),
    (T("lake", "with", NounPhrase("boat", 2)), "Existence + Counting"),
    (T("man", "riding", "horse"), "ActionComposite"),
    (T("bathtub", "is", "white"), "Attribute"),
    (T("road", "made of", "dirt"), "Attribute"),
    (T("bench", "located by", "shore"), "Spatial(near)"),
    (T("cup", "left of", "laptop"), "Spatial(left_of)"),
    (T("horse", "standing in", "field"), "Spatial(inside)"),
    (T("vase", "in front of", "lamp"), "Spatial(overlap_or_near)"),
    (T("man", "is", "surfing"), "Attribute"),
    (T("man", "is", "cowboy"), "ActionComposite"),
    (T("dog", "feeding", NounPhrase("puppy", 3)), "ActionComposite + Counting"),
])
def test_classify(t, expected):
    assert str(classify_predicate(t)) == expected


def listing(t):
    return synthesize(t).listing().splitlines()


def test_action_composite_template():
    assert listing(T("man", "riding", "horse")) == [
        "r0 = DETECT('man riding horse')", "r1 = DETECT('man')", "r2 = DETECT('horse')",
        "r3 = NONEMPTY(r0)", "r4 = NONEMPTY(r1)", "r5 = NONEMPTY(r2)", "r6 = AND(r3, r4, r5)",
    ]


def test_attribute_template():
    assert listing(T("bathtub", "is", "white")) == ["r0 = DETECT('white bathtub')", "r1 = NONEMPTY(r0)"]


def test_reading_template():
    ops = [i.op for i in synthesize(T("sign", "reads", NounPhrase(literal="Norfolk"))).instructions]
    assert ops == ["DETECT", "READ_TEXT", "ASSERT_TEXT_MATCH"]


def test_counting_adds_count_and_relation():
    prog = synthesize(T("lake", "with", NounPhrase("boat", 2)))
    ops = [i.op for i in prog.instructions]
    assert ops.count("ASSERT_COUNT") == 1 and ops[-1] == "AND"
    count = next(i for i in prog.instructions if i.op == "ASSERT_COUNT")
    assert count.min == 2 and not count.exact


def test_counting_without_relation_adds_near():
    prog = synthesize(T(NounPhrase("dog", 2), "chasing", "ball"))
    assert any(i.op == "ASSERT_RELATION" and i.relation == "near" for i in prog.instructions)


def test_strict_counting_flag():
    lex = PredicateLexicon(strict_counting=True)
    prog = synthesize(T("lake", "with", NounPhrase("boat", 2)), lex)
    assert next(i for i in prog.instructions if i.op == "ASSERT_COUNT").exact


@pytest.mark.parametrize("t", [
    T("snow", "is", "under"),
    T("", "on", "table"),
    T("cat", "", "table"),
    Triplet(0, NounPhrase("cat"), "on", NounPhrase()),
])
def test_bad_triplets(t):
    with pytest.raises(SynthesisError):
        synthesize(t)


QUERIES = ["man riding horse", "a sign that reads Norfolk", "two horses standing in a field near a brick building",
           "the bathtub is white", "a woman holding an umbrella", "three sheep in a field"]


@pytest.mark.parametrize("q", QUERIES)
def test_one_routine_per_triplet_and_static_checks(q):
    spec = parse_query(q)
    programs = synthesize_all(spec)
    assert len(programs) == len(spec.triplets)
    for p in programs:
        check_program(p)
        assert synthesize(spec.triplets[p.triplet_id]) == p


@pytest.mark.parametrize("q", QUERIES)
def test_ingest_round_trip(q):
    for p in synthesize_all(parse_query(q)):
        assert ingest_routine(json.dumps(program_to_dict(p))) == p


def test_ingest_rejects_bad_programs():
    with pytest.raises(StaticCheckError):
        ingest_routine(json.dumps({"triplet_id": 0, "instructions": [{"op": "DETECT", "query": "x", "out": "r0"}]}))
    with pytest.raises(StaticCheckError):
        ingest_routine(json.dumps({"triplet_id": 0, "instructions": [{"op": "NONEMPTY", "src": "r5", "out": "r0"}]}))
    with pytest.raises(MalformedInput):
        ingest_routine(json.dumps({"triplet_id": 0, "instructions": [{"op": "EXEC", "out": "r0"}]}))


@pytest.mark.parametrize("n", range(1, 17))
def test_state_count(n):
    t = Triplet(0, NounPhrase("a"), "on", NounPhrase("b"))
    spec = Specification(QueryText("q"), tuple(Triplet(i, t.subject, t.predicate, t.object) for i in range(n)))
    assert estimate_state_count(spec) == {"triplet_local": n, "cartesian": 2 ** n - 1}


def test_lexicon_file(tmp_path):
    path = tmp_path / "lex.json"
    path.write_text(json.dumps({"feeding": "spatial:near"}))
    lex = load_lexicon(path)
    assert str(classify_predicate(T("man", "feeding", "giraffe"), lex)) == "Spatial(near)"
    assert lex.lookup("on") == "spatial:on"
    path.write_text(json.dumps({"feeding": "teleport"}))
    with pytest.raises(MalformedInput):
        load_lexicon(path)


@given(st.sampled_from(sorted(DEFAULT_LEXICON.predicates)), st.sampled_from(["", "standing ", "sitting "]))
def test_lookup_uses_longest_suffix(pred, prefix):
    assert DEFAULT_LEXICON.lookup(prefix + pred) == DEFAULT_LEXICON.predicates[pred] or \
        any((prefix + pred).endswith(" " + k) or prefix + pred == k for k in DEFAULT_LEXICON.predicates
            if len(k) > len(pred))
