import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vismc.errors import InvalidSpecification, MalformedInput, ParseError
from vismc.model import NounPhrase, Source, spec_to_dict
from vismc.parser import composite_specification, ingest_triplets, parse_or_fallback, parse_query


def triples(q):
    return [(t.subject, t.predicate, t.object) for t in parse_query(q).triplets]


def test_simple_clause():
    assert triples("man riding horse") == [(NounPhrase("man"), "riding", NounPhrase("horse"))]


def test_adjunct_and_particle():
    horse = NounPhrase("horse", 2)
    assert triples("two horses standing around in a field near a brick building") == [
        (horse, "standing in", NounPhrase("field")),
        (horse, "near", NounPhrase("building", attributes=("brick",))),
    ]


def test_reading_literal():
    assert triples("a sign that reads Norfolk") == [(NounPhrase("sign"), "reads", NounPhrase(literal="Norfolk"))]


def test_quoted_literal_and_says():
    assert triples('a clock that says "12:30"')[0][2] == NounPhrase(literal="12:30")


def test_copula():
    assert triples("the bathtub is white") == [(NounPhrase("bathtub"), "is", NounPhrase("white"))]


def test_coordinated_objects_fan_out():
    got = triples("a boxed meal of sandwich roll, orange juice and strawberry yogurt")
    assert [o.phrase() for _, _, o in got] == ["sandwich roll", "orange juice", "strawberry yogurt"]
    assert {s for s, _, _ in got} == {NounPhrase("meal", attributes=("boxed",))}
    assert {p for _, p, _ in got} == {"of"}


def test_plural_subject():
    assert triples("people riding bicycles") == [(NounPhrase("person"), "riding", NounPhrase("bicycle"))]


def test_numeral_phrase():
    assert triples("a couple of dogs on a couch")[0][0] == NounPhrase("dog", 2)


def test_possessives_become_with():
    assert triples("a dog has a collar") == [(NounPhrase("dog"), "with", NounPhrase("collar"))]
    assert (NounPhrase("man"), "with", NounPhrase("hat")) in triples("a man's hat on a table")


def test_clause_coordination():
    got = triples("a cat on a table and a dog under a chair")
    assert [(s.head, p, o.head) for s, p, o in got] == [("cat", "on", "table"), ("dog", "under", "chair")]


@pytest.mark.parametrize("q", ["", "   ", "no dogs on the couch", "a cat not on a table"])
def test_parse_errors(q):
    with pytest.raises(ParseError):
        parse_query(q)


def test_fallback_composite():
    spec = parse_or_fallback("no dogs on the couch", fallback_composite=True)
    (t,) = spec.triplets
    assert t.predicate == "depicts" and t.object.literal == "no dogs on the couch"
    assert composite_specification("x y").triplets[0].subject.head
    with pytest.raises(ParseError):
        parse_or_fallback("no dogs", fallback_composite=False)


QUERIES = [
    "man riding horse", "a sign that reads Norfolk", "two boats on a lake", "the bathtub is white",
    "a bench by the shore", "a cup left of a laptop", "three sheep in a field", "a giraffe eating from a tree",
]


@pytest.mark.parametrize("q", QUERIES)
def test_round_trip_through_json(q):
    spec = parse_query(q)
    assert spec.source is Source.GRAMMAR
    again = ingest_triplets(json.dumps(spec_to_dict(spec)).encode())
    assert again == spec and again.source is Source.EXTERNAL_JSON


@pytest.mark.parametrize("q", QUERIES)
def test_deterministic(q):
    assert parse_query(q) == parse_query(q)


@given(st.sampled_from(QUERIES), st.sampled_from(["near a tree", "by the road", "under a bridge", "in a park"]))
def test_adjunct_never_reduces_triplets(q, adjunct):
    before = len(parse_query(q).triplets)
    try:
        after = len(parse_query(f"{q} {adjunct}").triplets)
    except ParseError:
        return
    assert after >= before


def test_ingest_valid():
    doc = {"query": "bench by the shore",
           "triplets": [{"id": 0, "s": {"head": "bench"}, "p": "located by", "o": {"head": "shore"}}]}
    spec = ingest_triplets(json.dumps(doc))
    assert spec.triplets[0].predicate == "located by"


@pytest.mark.parametrize("doc", [
    {"query": "q", "triplets": []},
    {"query": "q", "triplets": [{"id": 0, "s": {"head": "a"}, "p": "", "o": {"head": "b"}}]},
    {"query": "q", "triplets": [{"id": 1, "s": {"head": "a"}, "p": "on", "o": {"head": "b"}}]},
])
def test_ingest_invalid(doc):
    with pytest.raises(InvalidSpecification):
        ingest_triplets(json.dumps(doc))


def test_ingest_malformed_names_path():
    with pytest.raises(MalformedInput) as e:
        ingest_triplets(json.dumps({"query": "q", "triplets": [{"id": 0, "s": "man", "p": "on", "o": {}}]}))
    assert "triplets[0]" in e.value.path
    with pytest.raises(MalformedInput):
        ingest_triplets(b"{not json")
