"""The nine acceptance criteria at their stated sizes and tolerances.

Each test prints one ``[criterion k] PASS`` or ``FAIL`` line.
"""
import math
import time

import numpy as np
import pytest

from greedybases import construction as C
from greedybases.analysis import nondemocracy_demo, one_greedy_check, property_A_check
from greedybases.experiments import ExperimentConfig, max_sum_basis, random_index_sets, run, skewed_pair_basis
from greedybases.greedy import FiniteBasis, sigma_n_exact
from greedybases.space import Explicit, SpaceSpec, Uniform, dense_norm

from oracles import padded_norms, sigma_grid, sigma_restriction


@pytest.fixture
def announce(capsys):
    def _say(k, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {k}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return _say


def _checks(report):
    return {c["name"]: c for c in report["checks"]}


def test_criterion_1_democracy_certificates(announce):
    t0 = time.perf_counter()
    report, _ = run(ExperimentConfig("construct-and-verify", seed=0, p=("1", "2", "inf"), q=2.0,
                                     n_levels=2, eps=0.9))
    elapsed = time.perf_counter() - t0
    checks = _checks(report)
    size = checks["family size"]["value"]
    certs = [c for name, c in checks.items() if name.startswith("certificates")]
    tested = sum(c["value"]["tested"] for c in certs)
    failures = sum(c["value"]["failures"] for c in certs)
    ok = (size == 7717 and len(certs) == 6 and failures == 0 and checks["parameter conditions"]["pass"]
          and all(c["value"]["tested"] in (10_000, 2 ** 16 - 1) for c in certs) and elapsed < 120)
    announce(1, ok, f"{tested} certificates over p in {{1, 2, inf}}, {failures} failures, {elapsed:.1f}s")


def test_criterion_2_compressed_matches_dense(announce):
    instances = [(2, (1, 3, 4)), (1.5, (1, 10, 100)), (3, (1, 7, 11, 13)), (2, (1, 2, 2, 2, 2, 2, 2)),
                 (1.5, (1, 50, 200)), (4, (1, 5, 40, 50))]
    rng = np.random.default_rng(0)
    worst, count = 0.0, 0
    for q, k in instances:
        params = C.relaxed_params(q, k)
        assert params.n_total <= 10_000
        ids = C.family_ids(params)
        for idx in random_index_sets(len(ids), 1000, rng):
            A = [ids[i] for i in idx]
            rect = C.dense_rectangle(params, A)
            for p in (1, 2, "inf"):
                dense = float(dense_norm(rect, p, params.q)) ** params.q.value
                comp = C.compressed_norm_q_power(params, A, p)
                worst = max(worst, abs(dense - comp) / max(1.0, dense))
                count += 1
    announce(2, worst <= 1e-10, f"{count} comparisons, max relative gap {worst:.2e}")


def test_criterion_3_y_isometry(announce):
    rng = np.random.default_rng(1)
    params = C.build_params(2, 0.9, 2)
    worst = 0.0
    for p in (1, 1.5, 2, 4, "inf"):
        a = rng.standard_normal((1000, params.N)) * rng.choice([1e-3, 1.0, 1e3], size=(1000, 1))
        rects = np.stack([C.y_dense(params, row) for row in a])
        got = dense_norm(rects, p, params.q)
        pv = math.inf if p == "inf" else p
        want = np.linalg.norm(a, ord=pv, axis=1)
        worst = max(worst, float(np.max(np.abs(got - want) / want)))
    announce(3, worst <= 1e-12, f"5000 vectors, max relative error {worst:.2e}")


def test_criterion_4_projections(announce):
    report, _ = run(ExperimentConfig("projection-norms", seed=0, p=("2",), q=2.0, n_levels=2, eps=0.9))
    checks = _checks(report)
    idem = [checks[n] for n in ("T_X idempotent", "T_Y idempotent")]
    ratio = checks["random ||T_X v||/||v|| p=q=2"]
    ok = all(c["pass"] and c["value"] <= 1e-12 for c in idem) and ratio["pass"] and ratio["value"] <= 1 + 1e-12
    announce(4, ok, f"idempotence errors {idem[0]['value']:.1e}, {idem[1]['value']:.1e}; "
                    f"max ||T_X v||/||v|| over 10^4 vectors {ratio['value']:.15f}")


def test_criterion_5_kt_both_directions(announce):
    t0 = time.perf_counter()
    report, _ = run(ExperimentConfig("greedy-constants", seed=0, p=("2",)))
    elapsed = time.perf_counter() - t0
    checks = _checks(report)
    fwd = checks["random lattice bases: C <= K + K^3 Delta"]
    conv = checks["random lattice bases: K <= C and Delta <= C^2"]
    ok = fwd["pass"] and conv["pass"] and elapsed < 300
    announce(5, ok, f"50 lattice bases, max C/(K+K^3 Delta) = {fwd['value']:.6f}, "
                    f"max Delta - C^2 = {conv['value']:.2e}, {elapsed:.1f}s")


def test_criterion_6_one_greedy_characterization(announce):
    canon = []
    for p in (1, 2, "inf"):
        for N in range(1, 6):
            b = FiniteBasis.canonical(SpaceSpec(p, 1, Uniform(N)), [(i, 1) for i in range(1, N + 1)])
            canon.append(one_greedy_check(b, samples=30, tol=1e-12).passed)
    pa = property_A_check(max_sum_basis(), vectors=[np.array([0.0, 1.0, 1.0])])
    pair = one_greedy_check(skewed_pair_basis(), samples=20)
    ok = all(canon) and not pa.passed and bool(pa.witnesses) and "suppression" in pair.failed
    announce(6, ok, f"canonical bases pass {sum(canon)}/{len(canon)}; max-sum basis witness "
                    f"{pa.witnesses[0][1] if pa.witnesses else None}; skewed pair fails {pair.failed}")


def test_criterion_7_maximal_operator(announce):
    report, _ = run(ExperimentConfig("maximal", seed=0))
    checks = _checks(report)
    names = ["M(a) >= |a|", "sublinearity", "homogeneity", "averaging domination"]
    names += [f"strong type q={q} {s}" for q in (1.5, 2.0, 3.0) for s in ("bounded", "range-stable")]
    ok = all(checks[n]["pass"] for n in names)
    drift = max(checks[f"strong type q={q} range-stable"]["value"] for q in (1.5, 2.0, 3.0))
    announce(7, ok, f"10^4 sequences and layouts, sublinearity slack {checks['sublinearity']['value']:.1e}, "
                    f"range drift {drift:.1e}")


def test_criterion_8_nondemocracy(announce):
    l1 = nondemocracy_demo(2, "l1", 100)
    c0 = nondemocracy_demo(2, "c0", 100)
    ok = (abs(l1.within - 10) <= 1e-12 and abs(l1.across - 100) <= 1e-12
          and abs(c0.within - 10) <= 1e-12 and abs(c0.across - 1) <= 1e-12)
    announce(8, ok, f"l1 sum: {l1.within}, {l1.across}; c0 sum: {c0.within}, {c0.across}")


def _lattice_instance(rng):
    dims = [int(d) for d in rng.integers(1, 5, size=int(rng.integers(1, 5)))]
    while sum(dims) > 12:
        dims.pop()
    p, q = (rng.choice(["1", "1.5", "2", "3", "inf"]) for _ in range(2))
    spec = SpaceSpec(p, q, Explicit(dims))
    idx = [(i, n) for n, d in enumerate(dims, start=1) for i in range(1, d + 1)]
    b = FiniteBasis.canonical(spec, idx)
    c = rng.standard_normal(len(idx)) * (rng.random(len(idx)) < 0.85)
    n = int(rng.integers(0, len(idx) + 1))
    norm_fn = lambda r: float(padded_norms(r[None, :], None, dims, p, q)[0])  # noqa: E731
    return b, c, n, sigma_restriction(c, n, norm_fn)


def _general_instance(rng):
    dims = [int(d) for d in rng.integers(1, 4, size=2)]
    p, q = (rng.choice(["1", "1.5", "2", "3", "inf"]) for _ in range(2))
    spec = SpaceSpec(p, q, Explicit(dims))
    idx = [(i, n) for n, d in enumerate(dims, start=1) for i in range(1, d + 1)]
    M = int(rng.integers(2, min(4, len(idx)) + 1))
    while True:
        cols = rng.standard_normal((len(idx), M))
        if np.linalg.svd(cols, compute_uv=False)[-1] > 0.2:
            break
    b = FiniteBasis.from_columns(spec, idx, cols)
    c = rng.standard_normal(M)
    n = int(rng.integers(1, min(2, M) + 1))
    return b, c, n, sigma_grid(b.matrix, c, n, lambda rows: padded_norms(rows, None, dims, p, q))


def test_criterion_9_sigma_oracle_equivalence(announce):
    rng = np.random.default_rng(9)
    worst, kinds = 0.0, {"lattice": 0, "general": 0}
    for t in range(200):
        kind = "lattice" if t % 4 else "general"
        b, c, n, want = (_lattice_instance if kind == "lattice" else _general_instance)(rng)
        kinds[kind] += 1
        worst = max(worst, abs(sigma_n_exact(c, n, b) - want))
    announce(9, worst <= 1e-6, f"{kinds['lattice']} lattice and {kinds['general']} general instances, "
                               f"max gap {worst:.2e}")
