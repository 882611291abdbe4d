import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from vismc import geometry
from vismc.model import Box
from vismc.vm import VmConfig, eval_relation

CFG = VmConfig()


@st.composite
def box(draw):
    x0 = draw(st.floats(0.0, 0.9))
    y0 = draw(st.floats(0.0, 0.9))
    x1 = draw(st.floats(x0 + 0.01, 1.0))
    y1 = draw(st.floats(y0 + 0.01, 1.0))
    return Box(x0, y0, x1, y1)


def test_left_of_example():
    ok, witness = eval_relation("left_of", [Box(0.1, 0.1, 0.3, 0.3)], [Box(0.5, 0.1, 0.7, 0.3)], CFG)
    assert ok and witness[0].x0 == 0.1


def test_identical_boxes_inside():
    b = Box(0.4, 0.4, 0.6, 0.6)
    assert eval_relation("inside", [b], [b], CFG)[0]


def test_far_corners_not_near():
    a, b = Box(0.05, 0.05, 0.15, 0.15), Box(0.85, 0.85, 0.95, 0.95)
    dist = math.hypot(0.8, 0.8)
    assert dist > 0.25 * math.sqrt(2)
    assert not eval_relation("near", [a], [b], CFG)[0]


def test_empty_lists_have_no_witness():
    assert eval_relation("near", [], [Box(0, 0, 1, 1)], CFG) == (False, None)


def test_unknown_relation():
    with pytest.raises(ValueError):
        eval_relation("beside-ish", [], [], CFG)


def test_on_requires_contact():
    cup = Box(0.4, 0.3, 0.5, 0.5)
    table = Box(0.2, 0.5, 0.8, 0.9)
    floating = Box(0.4, 0.1, 0.5, 0.3)
    assert eval_relation("on", [cup], [table], CFG)[0]
    assert not eval_relation("on", [floating], [table], CFG)[0]


def test_under_needs_horizontal_overlap():
    table = Box(0.2, 0.2, 0.6, 0.4)
    assert eval_relation("under", [Box(0.3, 0.6, 0.5, 0.9)], [table], CFG)[0]
    assert not eval_relation("under", [Box(0.7, 0.6, 0.9, 0.9)], [table], CFG)[0]


def test_backend_switch():
    assert "numpy" in geometry.available_backends()
    with pytest.raises(ValueError):
        geometry.set_backend("cuda")


@settings(max_examples=200, deadline=None)
@given(st.lists(box(), min_size=0, max_size=4), st.lists(box(), min_size=0, max_size=4),
       st.sampled_from(geometry.RELATIONS))
def test_backends_agree_with_reference(a, b, rel):
    expected = np.array([[oracles.relation_holds(rel, x.coords, y.coords) for y in b] for x in a],
                        dtype=bool).reshape(len(a), len(b))
    for backend in geometry.available_backends():
        got = geometry.relation_matrix(rel, a, b, CFG, backend=backend)
        assert np.array_equal(got, expected), backend
        hit = geometry.first_witness(rel, a, b, CFG, backend=backend)
        hits = np.argwhere(expected)
        assert hit == (None if hits.size == 0 else tuple(int(v) for v in hits[0]))


@settings(max_examples=200, deadline=None)
@given(box(), box())
def test_duality(a, b):
    for r, d in (("left_of", "right_of"), ("above", "below")):
        assert eval_relation(r, [a], [b], CFG)[0] == eval_relation(d, [b], [a], CFG)[0]


@settings(max_examples=200, deadline=None)
@given(box(), box(), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_near_monotone_in_fraction(a, b, f1, f2):
    lo, hi = sorted((f1, f2))
    if eval_relation("near", [a], [b], VmConfig(near_frac=lo))[0]:
        assert eval_relation("near", [a], [b], VmConfig(near_frac=hi))[0]


def test_iou():
    assert geometry.iou((0, 0, 1, 1), (0, 0, 1, 1)) == 1.0
    assert geometry.iou((0, 0, 0.5, 0.5), (0.5, 0.5, 1, 1)) == 0.0


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("0", None)])
def test_disable_flag_selects_numpy(flag, expected):
    env = {**os.environ, "VISMC_DISABLE_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c", "from vismc import geometry; print(geometry.active_backend())"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == (expected or geometry.available_backends()[-1])
