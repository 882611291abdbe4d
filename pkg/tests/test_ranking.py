import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from vismc.errors import DuplicateVerdict, EmptyBaseline, MalformedInput, MissingScore, MissingVerdict
from vismc.model import ErrorClass, Outcome, TruthScore, Verdict
from vismc.ranking import BaselineRanking, IndeterminatePolicy, rank, rerank, truth_score

S, V, I = Outcome.SATISFIED, Outcome.VIOLATED, Outcome.INDETERMINATE


def verdicts(*outcomes, image="img"):
    return [Verdict(image, n, o, (), ErrorClass.BACKEND_FAILURE if o is I else None) for n, o in enumerate(outcomes)]


def test_truth_score_examples():
    assert truth_score(verdicts(S, S, S, V)).value == Fraction(3, 4)
    assert truth_score(verdicts(S, S)).value == 1
    assert truth_score(verdicts(S, I, V, V)).value == Fraction(1, 4)
    assert truth_score(verdicts(S, I, V, V), IndeterminatePolicy.EXCLUDE).value == Fraction(1, 3)


def test_all_indeterminate_excluded():
    s = truth_score(verdicts(I, I), IndeterminatePolicy.EXCLUDE)
    assert s.value == 0 and s.total == 2 and s.all_indeterminate


def test_truth_score_errors():
    vs = verdicts(S, V)
    with pytest.raises(DuplicateVerdict):
        truth_score(vs + vs[:1])
    with pytest.raises(MissingVerdict):
        truth_score(vs, triplet_ids=[0, 1, 2])
    with pytest.raises(MissingVerdict):
        truth_score([])


@given(st.lists(st.sampled_from([S, V, I]), min_size=1, max_size=8), st.sampled_from(list(IndeterminatePolicy)))
def test_score_bounds(outcomes, policy):
    s = truth_score(verdicts(*outcomes), policy)
    assert 0 <= s.value <= 1
    if policy is IndeterminatePolicy.COUNT_IN_TOTAL:
        assert (s.value == 1) == all(o is S for o in outcomes)
    else:
        assert (s.value == 1) == (S in outcomes and V not in outcomes)


def scores(**kw):
    return {k: TruthScore(*v) for k, v in kw.items()}


def test_rank_examples():
    assert rank(["a", "b", "c"], scores(a=(1, 2), b=(2, 2), c=(0, 2))).image_ids == ["b", "a", "c"]
    assert rank(["b", "a"], scores(a=(1, 2), b=(1, 2))).image_ids == ["a", "b"]
    assert rank(["b", "a"], scores(a=(1, 2), b=(1, 2)), {"b": 3, "a": 1}).image_ids == ["b", "a"]
    assert rank([], {}).image_ids == []
    with pytest.raises(MissingScore):
        rank(["a"], {})


@given(st.dictionaries(st.text("abcdef", min_size=1, max_size=3), st.tuples(st.integers(0, 4), st.integers(0, 3)),
                       min_size=1, max_size=8), st.randoms())
def test_rank_permutation_invariant(raw, rnd):
    sc = {k: TruthScore(min(s, 4), 4) for k, (s, _) in raw.items()}
    ev = {k: e for k, (_, e) in raw.items()}
    ids = list(sc)
    shuffled = ids[:]
    rnd.shuffle(shuffled)
    assert rank(ids, sc, ev) == rank(shuffled, sc, ev)


@given(st.lists(st.lists(st.sampled_from([S, V]), min_size=3, max_size=3), min_size=2, max_size=6),
       st.integers(0, 5), st.integers(0, 2))
def test_rank_monotone(table, which, tid):
    which %= len(table)
    images = [f"i{n}" for n in range(len(table))]
    before = {img: truth_score(verdicts(*row, image=img)) for img, row in zip(images, table)}
    row = list(table[which])
    row[tid] = S
    after = dict(before)
    after[images[which]] = truth_score(verdicts(*row, image=images[which]))
    pos = rank(images, before).image_ids.index(images[which])
    assert rank(images, after).image_ids.index(images[which]) <= pos


def test_rerank_examples():
    base = BaselineRanking("q", tuple(f"i{n}" for n in range(10)))
    sc = {i: TruthScore(0, 4) for i in base.entries}
    sc["i0"] = TruthScore(1, 2)
    sc["i2"] = TruthScore(3, 4)
    out = rerank(base, sc)
    assert out.image_ids[:2] == ["i2", "i0"]
    assert [e.rerank_score for e in out.entries[:2]] == [6, 5]


def test_rerank_missing_score_is_zero():
    out = rerank(BaselineRanking("q", ("a", "b")), {"b": TruthScore(1, 1)})
    assert out.image_ids == ["b", "a"] and out.entries[1].rerank_score == 0


def test_baseline_validation():
    with pytest.raises(EmptyBaseline):
        BaselineRanking("q", ())
    with pytest.raises(MalformedInput):
        BaselineRanking("q", ("a", "a"))


@given(st.integers(1, 20), st.integers(1, 5), st.integers(1, 5))
def test_rerank_identity(k, num, den):
    num = min(num, den)
    base = BaselineRanking("q", tuple(f"i{n:02d}" for n in range(k)))
    out = rerank(base, {i: TruthScore(num, den) for i in base.entries})
    assert out.image_ids == list(base.entries)


@given(st.integers(2, 20), st.data())
def test_rerank_null_case(k, data):
    base = BaselineRanking("q", tuple(f"i{n:02d}" for n in range(k)))
    sat = data.draw(st.lists(st.integers(0, 3), min_size=k, max_size=k))
    sc = {i: TruthScore(s, 3) for i, s in zip(base.entries, sat)}
    out = rerank(base, sc)
    seen_zero = False
    for e in out.entries:
        if e.truth_score.satisfied == 0:
            seen_zero = True
        else:
            assert not seen_zero


def test_rerank_matches_reference():
    rng = random.Random(11)
    for _ in range(200):
        k = rng.randint(1, 20)
        base = BaselineRanking("q", tuple(f"i{n}" for n in range(k)))
        sc = {}
        for img in base.entries:
            total = rng.randint(1, 5)
            sc[img] = TruthScore(rng.randint(0, total), total)
        expected = oracles.rerank_reference(list(base.entries), {i: s.value for i, s in sc.items()})
        got = rerank(base, sc)
        assert [(e.image_id, e.rerank_score) for e in got.entries] == expected
