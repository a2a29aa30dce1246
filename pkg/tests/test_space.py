import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greedybases.errors import CapacityError, InvalidIndexError, UnsupportedSpaceError
from greedybases.space import (BlockLayout, Exponent, Explicit, Growing, MixedIndex, SpaceSpec,
                               SparseVector, Uniform, dense_norm, dual_exponent,
                               extreme_point_arrays, extreme_points, is_extreme_point, norm,
                               norming_functional, pairing, project)

from oracles import mixed_norm

EXPONENTS = [1, 1.5, 2, 3, 4, "inf"]


def test_exponent_parsing_and_dual():
    assert Exponent("inf").is_inf and Exponent(math.inf).is_inf
    assert Exponent(2).dual() == Exponent(2)
    assert Exponent(1).dual().is_inf and Exponent("inf").dual() == Exponent(1)
    assert Exponent(1.5).dual() == Exponent(3)
    assert Exponent("4/3").fraction == Fraction(4, 3)
    assert dual_exponent(3) == Exponent(1.5)
    with pytest.raises(ValueError):
        Exponent(0.5)


@given(st.fractions(min_value=1, max_value=50))
def test_dual_is_an_involution(f):
    e = Exponent(f)
    assert e.dual().dual() == e
    if not e.is_inf and f > 1:
        assert abs(1 / e.value + 1 / e.dual().value - 1) < 1e-15


def test_block_rules():
    assert Uniform(3).dim(10) == 3
    assert Growing().dim(7) == 7
    assert Explicit([1, 2]).dim(2) == 2 and Explicit([1, 2]).dim(3) == 0
    s = SpaceSpec(2, 1, Growing())
    s.check_index((3, 3))
    with pytest.raises(InvalidIndexError):
        s.check_index((4, 3))
    with pytest.raises(InvalidIndexError):
        s.check_index((0, 1))
    with pytest.raises(InvalidIndexError):
        SpaceSpec(2, 2, Explicit([2])).check_index((1, 2))


def test_norm_examples():
    s = SpaceSpec(2, 2, Uniform(2))
    assert norm(SparseVector({(1, 1): 3.0, (2, 1): 4.0}), s) == 5.0
    # l_1 over blocks of l_2 norms
    s = SpaceSpec(2, 1, Growing())
    v = SparseVector({(1, 2): 3.0, (2, 2): 4.0, (1, 1): -1.0})
    assert norm(v, s) == pytest.approx(6.0, abs=1e-15)
    s = SpaceSpec("inf", 2, Uniform(3))
    v = SparseVector({(1, 1): 1.0, (3, 1): -2.0, (2, 2): 2.0})
    assert norm(v, s) == pytest.approx(math.sqrt(8), abs=1e-15)
    assert norm(SparseVector(), s) == 0.0


def test_norm_rejects_bad_indices():
    with pytest.raises(InvalidIndexError):
        norm(SparseVector({(4, 1): 1.0}), SpaceSpec(2, 2, Uniform(3)))


def _random_vector(rng, dims, density=0.7):
    out = {}
    for n, d in enumerate(dims, start=1):
        for i in range(1, d + 1):
            if rng.random() < density:
                out[(i, n)] = float(rng.standard_normal())
    return out


@pytest.mark.parametrize("p", EXPONENTS)
@pytest.mark.parametrize("q", EXPONENTS)
def test_norm_matches_literal_oracle(p, q):
    rng = np.random.default_rng(hash((str(p), str(q))) % 2 ** 32)
    spec = SpaceSpec(p, q, Growing())
    for _ in range(30):
        entries = _random_vector(rng, [1, 2, 3, 4])
        v = SparseVector(entries)
        assert norm(v, spec) == pytest.approx(mixed_norm(entries, p, q), rel=1e-12, abs=1e-300)


def test_norm_is_scaled_against_overflow():
    spec = SpaceSpec(2, 2, Uniform(2))
    v = SparseVector({(1, 1): 1e300, (2, 1): 1e300})
    assert norm(v, spec) == pytest.approx(math.sqrt(2) * 1e300)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(EXPONENTS), st.sampled_from(EXPONENTS),
       st.lists(st.floats(-10, 10), min_size=6, max_size=6),
       st.lists(st.floats(-10, 10), min_size=6, max_size=6),
       st.floats(-5, 5))
def test_norm_axioms(p, q, a, b, lam):
    spec = SpaceSpec(p, q, Explicit([1, 2, 3]))
    keys = [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3), (3, 3)]
    u, w = SparseVector(zip(keys, a)), SparseVector(zip(keys, b))
    nu, nw = norm(u, spec), norm(w, spec)
    assert norm(u + w, spec) <= nu + nw + 1e-12 * (nu + nw + 1)
    assert norm(u * lam, spec) == pytest.approx(abs(lam) * nu, rel=1e-12, abs=1e-300)
    flipped = SparseVector({k: -c for k, c in u.items()})
    assert norm(flipped, spec) == nu


@pytest.mark.parametrize("p", EXPONENTS)
@pytest.mark.parametrize("q", EXPONENTS)
def test_norming_functional(p, q):
    rng = np.random.default_rng(7)
    spec = SpaceSpec(p, q, Growing())
    for _ in range(20):
        v = SparseVector(_random_vector(rng, [1, 2, 3]))
        w = norming_functional(v, spec)
        if not v:
            assert not w
            continue
        assert norm(w, spec.dual()) == pytest.approx(1.0, abs=1e-12)
        assert pairing(w, v) == pytest.approx(norm(v, spec), rel=1e-12)


def test_sparse_vector_algebra_and_json():
    v = SparseVector({(1, 2): 1.5, (2, 2): 0.0, (1, 1): -2.0})
    assert len(v) == 2 and v[(2, 2)] == 0.0
    assert (v - v) == SparseVector.zero()
    assert (2 * v)[(1, 2)] == 3.0 and (v / 2)[(1, 1)] == -1.0
    spec = SpaceSpec(2, "inf", Growing())
    text = v.to_json(spec)
    obj = json.loads(text)
    assert obj["entries"] == [[1, 1, -2.0], [1, 2, 1.5]]
    back, spec2 = SparseVector.from_json(text)
    assert back == v and spec2 == spec
    assert project(v, [(1, 2)]) == SparseVector.unit(1, 2, 1.5)
    assert isinstance(next(iter(v)), MixedIndex)


@given(st.dictionaries(st.tuples(st.integers(1, 3), st.integers(3, 6)),
                       st.floats(-1e6, 1e6, allow_nan=False), max_size=8))
def test_json_roundtrip(entries):
    v = SparseVector(entries)
    spec = SpaceSpec("3/2", 2, Growing())
    back, spec2 = SparseVector.from_json(v.to_json(spec))
    assert back == v and spec2 == spec


@pytest.mark.parametrize("p", EXPONENTS)
@pytest.mark.parametrize("q", EXPONENTS)
def test_layout_batch_norms_and_dense_norm(p, q):
    rng = np.random.default_rng(3)
    spec = SpaceSpec(p, q, Explicit([2, 3, 1]))
    idx = [(i, n) for n, d in enumerate([2, 3, 1], start=1) for i in range(1, d + 1)]
    layout = BlockLayout(idx, spec)
    rows = rng.standard_normal((25, len(idx)))
    got = layout.norms(rows)
    for r, g in zip(rows, got):
        v = layout.to_sparse(r)
        assert g == pytest.approx(norm(v, spec), rel=1e-12)
        assert layout.to_dense(v) == pytest.approx(r)
    rect = rng.standard_normal((4, 3, 5))
    for k in range(4):
        entries = {(i + 1, n + 1): rect[k, i, n] for i in range(3) for n in range(5)}
        assert dense_norm(rect, p, q)[k] == pytest.approx(mixed_norm(entries, p, q), rel=1e-12)


def test_extreme_points_enumeration():
    spec = SpaceSpec("inf", 2, Uniform(2))
    pts = list(extreme_points(spec, (2, 1)))
    assert len(pts) == 4
    for e in pts:
        assert is_extreme_point(e.vector(), spec)
        assert norm(e.vector(), spec) == pytest.approx(1.0)
    prof = (math.sqrt(0.5), math.sqrt(0.5))
    pts = list(extreme_points(spec, (2, 2), profiles=[prof]))
    assert len(pts) == 16
    assert all(is_extreme_point(e.vector(), spec) for e in pts)
    assert not is_extreme_point(SparseVector({(1, 1): 1.0}), spec)
    assert not is_extreme_point(SparseVector({(1, 1): 0.5, (2, 1): 0.5}), spec)


def test_extreme_points_sampling_and_errors():
    spec = SpaceSpec("inf", 3, Uniform(3))
    for e in extreme_points(spec, (3, 4), samples=50, rng=1):
        assert is_extreme_point(e.vector(), spec)
    arrays = list(extreme_point_arrays(spec, (3, 4), 50, 1))
    tuples = list(extreme_points(spec, (3, 4), samples=50, rng=1))
    for arr, e in zip(arrays, tuples):
        assert np.array_equal(arr, np.asarray(e.signs, dtype=float).T * np.asarray(e.profile))
    with pytest.raises(UnsupportedSpaceError):
        list(extreme_points(SpaceSpec(2, 2, Uniform(2)), (2, 1)))
    with pytest.raises(UnsupportedSpaceError):
        list(extreme_points(SpaceSpec("inf", "inf", Uniform(2)), (2, 1)))
    with pytest.raises(CapacityError):
        list(extreme_points(spec, (3, 8), profiles=[(8 ** (-1 / 3),) * 8], max_patterns=1000))
    with pytest.raises(ValueError):
        list(extreme_points(spec, (3, 2), profiles=[(1.0, 1.0)]))
