import csv
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greedybases import construction as C
from greedybases.analysis import (argmax_set, democracy_constant, fundamental_function, greedy_permutations,
                                  kt_check, kt_upper_bound, measure_democracy, measure_suppression,
                                  measure_unconditionality, nondemocracy_demo, one_greedy_check,
                                  property_A_check, random_lattice_basis, structured_sets,
                                  suppression_constant, truncated_block_basis, unconditionality_constant,
                                  write_fundamental_csv)
from greedybases.errors import CapacityError
from greedybases.experiments import max_sum_basis, skewed_pair_basis
from greedybases.greedy import FiniteBasis
from greedybases.space import SpaceSpec, Uniform

from oracles import greedy_permutations_brute, padded_norms


def canonical(p, N, q=1):
    return FiniteBasis.canonical(SpaceSpec(p, q, Uniform(N)), [(i, 1) for i in range(1, N + 1)])


def democracy_brute(basis, dims, p, q, m_max=None):
    """max over |A| = |B| of the ratio of indicator sums, from dense padded norms."""
    M = basis.size
    m_max = M if m_max is None else m_max
    best = 1.0
    for m in range(1, m_max + 1):
        rows = []
        for A in itertools.combinations(range(M), m):
            rows.append(basis.matrix[:, list(A)].sum(axis=1))
        vals = padded_norms(np.array(rows), None, dims, p, q)
        best = max(best, vals.max() / vals.min())
    return best


# ---- unconditionality and suppression ---------------------------------------

def test_lattice_bases_have_constant_one():
    for p in (1, 2, "inf"):
        b = canonical(p, 4, q=2)
        assert unconditionality_constant(b) == 1.0
        assert measure_suppression(b).method == "exact"
    fam = C.BlockAveragingFamily(C.relaxed_params(2, (1, 2, 3)), 1).as_finite_basis()
    assert unconditionality_constant(fam) == pytest.approx(1.0, abs=1e-12)
    assert suppression_constant(max_sum_basis()) == 1.0


def test_skewed_pair_is_not_unconditional():
    b = skewed_pair_basis()
    K = measure_unconditionality(b, seed=1)
    S = measure_suppression(b, seed=1)
    assert K.method == "sampled" and K.value > 1.5
    assert 1.1 < S.value <= K.value + 1e-12
    # witness reproduces the reported value
    signs, a = K.witness
    ratio = b.norm_of(signs * a) / b.norm_of(a)
    assert ratio == pytest.approx(K.value, rel=1e-9)


def test_skewed_pair_analytic_values():
    # x_1 = e_1, x_2 = (e_1 + e_2)/sqrt2 in l_2^2; a x_1 + b x_2 has norm
    # sqrt((a + b/sqrt2)^2 + b^2/2).  At a = -b/sqrt2 the sum shrinks to |b|/sqrt2, so a sign
    # flip gives ratio sqrt5 and dropping x_1 gives ratio sqrt2.
    b = skewed_pair_basis()
    a = np.array([-1 / math.sqrt(2), 1.0])
    assert b.norm_of(a) == pytest.approx(1 / math.sqrt(2))
    assert b.norm_of(a * [-1, 1]) / b.norm_of(a) == pytest.approx(math.sqrt(5), rel=1e-12)
    assert b.norm_of([0.0, 1.0]) / b.norm_of(a) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert measure_unconditionality(b).value >= math.sqrt(5) - 1e-9
    assert measure_suppression(b).value >= math.sqrt(2) - 1e-9


def test_exact_mode_cap():
    spec = SpaceSpec(2, 2, Uniform(22))
    idx = [(i, 1) for i in range(1, 22)]
    cols = np.eye(21)
    cols[0, 1] = 1.0
    b = FiniteBasis.from_columns(spec, idx, cols)
    with pytest.raises(CapacityError):
        measure_unconditionality(b, mode="exact")
    big = canonical(2, 19)
    with pytest.raises(CapacityError):
        democracy_constant(big, mode="exact")


# ---- democracy and fundamental functions ------------------------------------

def test_fundamental_function_examples():
    assert fundamental_function(canonical(2, 6), 4) == pytest.approx((2.0, 2.0))
    b = truncated_block_basis(2, "l1", 14)
    packed, spread = structured_sets(b, 9)
    assert b.indicator_norm(spread) == pytest.approx(9.0)
    inside = [k for k in range(b.size) if b.home_block(k) == 9]
    assert b.indicator_norm(inside) == pytest.approx(3.0)
    hi, lo = fundamental_function(b, 14, mode="sampled", samples=200)
    assert hi == pytest.approx(14.0) and lo <= math.sqrt(14) + 1e-12
    assert democracy_constant(b, mode="sampled", samples=200) >= math.sqrt(14) - 1e-12


def test_democracy_matches_brute_oracle_and_is_permutation_invariant():
    rng = np.random.default_rng(0)
    for _ in range(15):
        b = random_lattice_basis(rng)
        dims = list(b.spec.blocks.dims)
        got = democracy_constant(b, mode="exact")
        assert got == pytest.approx(democracy_brute(b, dims, b.spec.p.value, b.spec.q.value), rel=1e-12)
        perm = rng.permutation(b.size)
        pb = FiniteBasis([b.elements[k] for k in perm], b.spec)
        assert democracy_constant(pb, mode="exact") == pytest.approx(got, rel=1e-12)


def test_fundamental_function_monotone_for_lattices():
    rng = np.random.default_rng(1)
    for _ in range(10):
        b = random_lattice_basis(rng)
        his, los = zip(*(fundamental_function(b, m, mode="exact") for m in range(1, b.size + 1)))
        assert all(x <= y + 1e-12 for x, y in zip(his, his[1:]))
        assert all(x <= y + 1e-12 for x, y in zip(los, los[1:]))


@pytest.mark.parametrize("p", [1, 2, "inf"])
def test_constructed_family_is_democratic(p):
    eps, q = 0.9, 1.5
    fam = C.BlockAveragingFamily(C.build_params(q, eps, 2), p)
    assert fam.size == 346
    for m in (1, 2, 19, 345, 346):
        hi, lo = fundamental_function(fam, m, mode="sampled", samples=300)
        assert ((1 - eps) * m) ** (1 / q) - 1e-9 <= lo <= hi <= ((1 + eps) * m) ** (1 / q) + 1e-9
    D = measure_democracy(fam, m_max=40, mode="sampled", samples=100)
    assert D.method == "sampled"
    assert 1.0 <= D.value <= ((1 + eps) / (1 - eps)) ** (1 / q) + 1e-9


def test_fundamental_csv(tmp_path):
    path = tmp_path / "phi.csv"
    write_fundamental_csv(canonical(1, 4), path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["m", "phi_max", "phi_min"]
    assert [float(r[1]) for r in rows[1:]] == [1.0, 2.0, 3.0, 4.0]


# ---- Konyagin-Temlyakov ------------------------------------------------------

def test_kt_canonical():
    rep = kt_check(canonical(3, 5), samples=50)
    assert rep.K_uncond == rep.Delta_democracy == 1.0
    assert rep.C_greedy_lower == pytest.approx(1.0, abs=1e-9)
    assert rep.ok and rep.kt_converse_K_ok and rep.kt_converse_Delta_ok
    assert rep.kt_upper == kt_upper_bound(1.0, 1.0) == 2.0
    assert json.loads(rep.to_json())["methods"]["K_uncond"] == "exact"


def test_kt_random_lattices_both_directions():
    rng = np.random.default_rng(2)
    for _ in range(8):
        b = random_lattice_basis(rng)
        rep = kt_check(b, samples=40)
        assert rep.methods["K_uncond"] == "exact" and rep.methods["Delta_democracy"] == "exact"
        assert rep.K_suppression <= rep.K_uncond <= rep.C_greedy_lower + 1e-9
        assert rep.C_greedy_lower <= rep.kt_upper + 1e-9
        assert rep.Delta_democracy <= rep.C_greedy_lower ** 2 + 1e-9
        assert rep.ok


def test_kt_sampled_constants_skip_converses():
    rep = kt_check(skewed_pair_basis(), samples=30)
    assert rep.kt_converse_K_ok is None and rep.kt_converse_Delta_ok is None
    assert rep.kt_forward_ok and rep.K_suppression <= rep.K_uncond + 1e-12


def test_kt_on_constructed_family():
    fam = C.BlockAveragingFamily(C.relaxed_params(2, (1, 2, 3)), "inf").as_finite_basis()
    rep = kt_check(fam, samples=60)
    assert rep.kt_forward_ok and rep.K_uncond == 1.0


# ---- greedy permutations and property (A) ------------------------------------

def test_greedy_permutation_examples():
    b = canonical(2, 3)
    maps = list(greedy_permutations([1.0, 0.0, 0.0], b))
    assert maps == [{0: 0}, {0: 1}, {0: 2}]
    assert list(greedy_permutations([1.0, 0.5, 0.2], b)) == [{0: 0}]
    b4 = canonical(2, 4)
    maps = list(greedy_permutations([1.0, -1.0, 0.0, 0.0], b4))
    # injective: both stay, one of two moves to one of two slots, or both move
    assert len(maps) == 7
    with pytest.raises(ValueError):
        list(greedy_permutations([1.0, 1.0, 1.0], b, ambient_size=2))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from([0.0, 0.5, 1.0, -1.0]), min_size=6, max_size=6), st.integers(0, 3))
def test_greedy_permutations_match_brute_oracle(c, extra):
    b = canonical(1, 6)
    c = np.array(c)
    support = [int(k) for k in np.flatnonzero(c)]
    if not support:
        return
    size = min(6, len(support) + extra)
    free = [k for k in range(6) if k not in support][: size - len(support)]
    ambient = sorted(support + free)
    tops = argmax_set(c)
    want = greedy_permutations_brute(support, tops, ambient)
    got = [tuple(sorted(pi.items())) for pi in greedy_permutations(c, b, ambient_size=size)]
    assert len(got) == len(set(got))
    assert set(got) == want


def test_property_a_examples():
    b = canonical(2, 3)
    rep = property_A_check(b, vectors=[np.array([1.0, 0.5, 0.0])])
    assert rep.passed and rep.tested == 1
    rep = property_A_check(max_sum_basis(), vectors=[np.array([0.0, 1.0, 1.0])])
    assert not rep.passed
    c, pi, signs = rep.witnesses[0]
    assert any(pi[j] == 0 for j in pi)
    assert rep.max_deviation == pytest.approx(0.5)  # |1 - 2| relative to ||x|| = 2
    body = json.loads(rep.to_json())
    assert body["pass"] is False and body["witnesses"]


def test_property_a_invariant_under_free_relabeling():
    b = max_sum_basis()
    rep1 = property_A_check(b, vectors=[np.array([0.0, 1.0, 0.0])])
    spec = b.spec
    relabeled = FiniteBasis([b.elements[k] for k in (1, 0, 2)], spec)
    rep2 = property_A_check(relabeled, vectors=[np.array([1.0, 0.0, 0.0])])
    assert rep1.max_deviation == pytest.approx(rep2.max_deviation)


@pytest.mark.parametrize("p", [1, 2, "inf"])
def test_one_greedy_canonical(p):
    rep = one_greedy_check(canonical(p, 5), samples=20)
    assert rep.passed and rep.failed == []
    assert json.loads(rep.to_json())["pass"] is True


def test_one_greedy_failures_name_the_leg():
    rep = one_greedy_check(max_sum_basis(), vectors=[np.array([0.0, 1.0, 1.0])])
    assert rep.failed == ["property_A"] and rep.suppression_ok
    rep = one_greedy_check(skewed_pair_basis(), samples=10)
    assert "suppression" in rep.failed


# ---- non-democracy of block sums ---------------------------------------------

def test_nondemocracy_values():
    r = nondemocracy_demo(2, "l1", 100)
    assert (r.within, r.across, r.ratio) == pytest.approx((10.0, 100.0, 10.0), abs=1e-12)
    r = nondemocracy_demo(2, "c0", 100)
    assert (r.within, r.across, r.ratio) == pytest.approx((10.0, 1.0, 10.0), abs=1e-12)
    for m in (1, 7, 50):
        assert nondemocracy_demo(1, "l1", m).ratio == pytest.approx(1.0, abs=1e-12)
        assert nondemocracy_demo(3, "l1", m).ratio == pytest.approx(m ** (2 / 3), rel=1e-12)
        assert nondemocracy_demo(3, "c0", m).ratio == pytest.approx(m ** (1 / 3), rel=1e-12)
    with pytest.raises(ValueError):
        nondemocracy_demo(2, "l2", 3)
    with pytest.raises(ValueError):
        nondemocracy_demo(2, "l1", 0)
