"""
Named experiments.  Each one returns a list of checks and optional CSV tables;
:func:`run` assembles them into a JSON report.

Random work is split into a fixed number of chunks seeded from the run seed,
so results do not depend on how many workers (``GBL_THREADS``) process them.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, construction, maximal
from .construction import ConstructionParams, BlockAveragingFamily
from .greedy import FiniteBasis, greedy_trace
from .space import Explicit, SpaceSpec, Uniform, as_exponent, dense_norm

CHUNKS = 8
EXPERIMENTS = ("construct-and-verify", "projection-norms", "greedy-constants",
               "property-a", "maximal", "nondemocracy-demo")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    p: tuple = ("1", "2", "inf")
    q: float = 2.0
    n_levels: int = 2
    eps: float = 0.9
    cap_family: int = construction.DEFAULT_CAP
    subsets: int | None = None
    k: tuple | None = None
    m: int = 100
    out_dir: str | None = None
    format: str = "json"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        d["p"] = list(self.p)
        d["k"] = list(self.k) if self.k else None
        return d


@dataclass
class Check:
    name: str
    passed: bool
    value: object = None
    bound: object = None

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": bool(self.passed), "value": _jsonable(self.value),
                "bound": _jsonable(self.bound)}


@dataclass
class Outcome:
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    jsonl: dict = field(default_factory=dict)  # file name -> lines


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("GBL_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, tasks: list) -> list:
    """Ordered map, in worker processes when ``GBL_THREADS`` > 1."""
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(fn, tasks))


def chunk_seeds(seed: int, n: int = CHUNKS) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def split(count: int, n: int = CHUNKS) -> list[int]:
    return [count // n + (1 if i < count % n else 0) for i in range(n)]


# ---- democracy certificates -------------------------------------------------

def random_index_sets(M: int, count: int, rng):
    """Subsets of ``range(M)`` with sizes drawn uniformly, small, and near-full."""
    for t in range(count):
        kind = t % 3
        if kind == 0:
            m = int(rng.integers(1, M + 1))
        elif kind == 1:
            m = int(rng.integers(1, min(M, 32) + 1))
        else:
            m = M - int(rng.integers(0, min(M, 32)))
        yield np.sort(rng.choice(M, size=m, replace=False))


def subfamily(params: ConstructionParams, size: int = 16) -> list:
    """The first element of each upper level plus leading level-1 elements."""
    ids = [construction.BasisElementId(lvl, 1) for lvl in range(params.N, 1, -1)]
    pos = 1
    while len(ids) < size and pos <= params.n_total:
        ids.append(construction.BasisElementId(1, pos))
        pos += 1
    return ids[:size]


@dataclass
class CertificateSummary:
    tested: int = 0
    failures: int = 0
    min_ratio: float = math.inf
    max_ratio: float = -math.inf
    failing: list = field(default_factory=list)

    def add(self, cert) -> None:
        self.tested += 1
        r = cert.exact_norm_q_power / len(cert.A)
        self.min_ratio = min(self.min_ratio, r)
        self.max_ratio = max(self.max_ratio, r)
        if not cert.verdict:
            self.failures += 1
            if len(self.failing) < 5:
                self.failing.append(cert.to_json(include_ids=len(cert.A) <= 64))

    def merge(self, other: "CertificateSummary") -> "CertificateSummary":
        self.tested += other.tested
        self.failures += other.failures
        self.min_ratio = min(self.min_ratio, other.min_ratio)
        self.max_ratio = max(self.max_ratio, other.max_ratio)
        self.failing.extend(other.failing[: 5 - len(self.failing)])
        return self


def _certify_random(task) -> CertificateSummary:
    params_json, p, seed, count = task
    params, p = ConstructionParams.from_json(params_json), as_exponent(p)
    rng = np.random.default_rng(seed)
    out = CertificateSummary()
    for idx in random_index_sets(construction.family_size(params), count, rng):
        out.add(construction.subset_norm_indices(params, idx, p))
    return out


def _certify_all(task) -> CertificateSummary:
    params_json, p, members, start, stop = task
    params, p = ConstructionParams.from_json(params_json), as_exponent(p)
    out = CertificateSummary()
    for mask in range(start, stop):
        A = [members[b] for b in range(len(members)) if mask >> b & 1]
        out.add(construction.subset_norm(params, A, p))
    return out


def certify(params: ConstructionParams, p, random_count: int, seed: int,
            sub_size: int = 16) -> tuple[CertificateSummary, CertificateSummary]:
    """Democracy certificates on random subsets and on every subset of a subfamily."""
    blob = params.to_json()
    p = str(as_exponent(p).to_json())
    rand = CertificateSummary()
    tasks = [(blob, p, s, c) for s, c in zip(chunk_seeds(seed), split(random_count))]
    for part in parallel_map(_certify_random, tasks):
        rand.merge(part)
    members = [tuple(m) for m in subfamily(params, sub_size)]
    total = 1 << len(members)
    bounds = np.linspace(1, total, CHUNKS + 1).astype(int)
    full = CertificateSummary()
    tasks = [(blob, p, members, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    for part in parallel_map(_certify_all, tasks):
        full.merge(part)
    return rand, full


def exp_construct_and_verify(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    params = construction.build_params(cfg.q, cfg.eps, cfg.n_levels, cap=cfg.cap_family)
    out.checks.append(Check("parameter conditions", not construction.condition_violations(params),
                            construction.condition_violations(params), []))
    out.checks.append(Check("family size", True, construction.family_size(params), None))
    count = 10_000 if cfg.subsets is None else cfg.subsets
    lines = []
    for p in cfg.p:
        rand, full = certify(params, p, count, cfg.seed)
        for label, s in (("random", rand), ("subfamily", full)):
            out.checks.append(Check(f"certificates p={p} {label}", s.failures == 0,
                                    {"tested": s.tested, "failures": s.failures,
                                     "min_ratio": s.min_ratio, "max_ratio": s.max_ratio},
                                    [1 - cfg.eps, 1 + cfg.eps]))
            lines.extend(s.failing)
    out.jsonl["params.json"] = [params.to_json()]
    out.jsonl["failing_certificates.jsonl"] = lines
    return out


# ---- projections ------------------------------------------------------------

def desk_params(cfg: ExperimentConfig) -> ConstructionParams:
    """Honest parameters when they fit in memory, else a relaxed instance."""
    if cfg.k:
        return construction.relaxed_params(cfg.q, cfg.k)
    try:
        params = construction.build_params(cfg.q, cfg.eps, cfg.n_levels, cap=cfg.cap_family)
        if params.N * params.n_total <= construction.DENSE_CAP:
            return params
    except construction.CapacityError:
        pass
    return construction.relaxed_params(cfg.q, (1, 3, 4)[: max(cfg.n_levels, 2)])


def exp_projection_norms(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    params = desk_params(cfg)
    N, nN = params.N, params.n_total
    rng = np.random.default_rng(cfg.seed)
    v = rng.standard_normal((200, N, nN))
    TX = construction.T_X_dense(params, v)
    TY = construction.T_Y_dense(params, v)
    err_x = float(np.max(np.abs(construction.T_X_dense(params, TX) - TX)))
    err_y = float(np.max(np.abs(construction.T_Y_dense(params, TY) - TY)))
    err_yx = float(np.max(np.abs(construction.T_Y_dense(params, TX) - TY)))
    out.checks += [Check("T_X idempotent", err_x <= 1e-12, err_x, 1e-12),
                   Check("T_Y idempotent", err_y <= 1e-12, err_y, 1e-12),
                   Check("T_Y T_X = T_Y", err_yx <= 1e-12, err_yx, 1e-12)]
    rows = []
    count = 10_000 if cfg.subsets is None else cfg.subsets
    for p in cfg.p:
        for which in ("T_X", "T_Y"):
            lb = construction.operator_norm_lower_bound(params, which, p, samples=min(count, 4000),
                                                        seed=cfg.seed)
            rows.append([str(p), which, repr(lb)])
            if as_exponent(p) == params.q:
                out.checks.append(Check(f"||{which}|| <= 1 at p=q={p}", lb <= 1 + 1e-12, lb, 1 + 1e-12))
            else:
                out.checks.append(Check(f"||{which}|| lower bound p={p}", math.isfinite(lb), lb, None))
        if as_exponent(p) == params.q:
            ratio = 0.0
            for b in split(count, max(1, count // 64)):
                w = rng.standard_normal((b, N, nN))
                ratio = max(ratio, float(np.max(dense_norm(construction.T_X_dense(params, w), p, params.q)
                                                / dense_norm(w, p, params.q))))
            out.checks.append(Check(f"random ||T_X v||/||v|| p=q={p}", ratio <= 1 + 1e-12, ratio, 1 + 1e-12))
    out.tables["operator_norms.csv"] = (["p", "operator", "lower_bound"], rows)
    out.jsonl["params.json"] = [params.to_json()]
    return out


# ---- greedy constants -------------------------------------------------------

def _kt_random_lattice(seed: int) -> dict:
    basis = analysis.random_lattice_basis(np.random.default_rng(seed))
    return analysis.kt_check(basis, samples=60, seed=seed).to_dict()


def exp_greedy_constants(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    rows = []
    for p in cfg.p:
        basis = FiniteBasis.canonical(SpaceSpec(p, 1, Uniform(5)), [(i, 1) for i in range(1, 6)])
        rep = analysis.kt_check(basis, samples=100, seed=cfg.seed)
        out.checks.append(Check(f"canonical l_{p}^5 KT", rep.ok and rep.C_greedy_lower <= 1 + 1e-9,
                                rep.C_greedy_lower, rep.kt_upper))
        rows.append([f"canonical p={p}", rep.K_uncond, rep.Delta_democracy, rep.C_greedy_lower, rep.kt_upper])
    count = 50 if cfg.subsets is None else cfg.subsets
    seeds = [cfg.seed * 1_000_003 + t for t in range(count)]
    reps = parallel_map(_kt_random_lattice, seeds)
    fwd = all(r["kt_forward_ok"] for r in reps)
    conv = all(r["kt_converse_K_ok"] is not False and r["kt_converse_Delta_ok"] is not False for r in reps)
    worst = max(r["C_greedy_lower"] / r["kt_upper"] for r in reps)
    out.checks.append(Check("random lattice bases: C <= K + K^3 Delta", fwd, worst, 1.0))
    out.checks.append(Check("random lattice bases: K <= C and Delta <= C^2", conv,
                            max(r["Delta_democracy"] - r["C_greedy_lower"] ** 2 for r in reps), analysis.KT_TOL))
    for s, r in zip(seeds, reps):
        rows.append([f"lattice seed={s}", r["K_uncond"], r["Delta_democracy"], r["C_greedy_lower"], r["kt_upper"]])
    trace = greedy_trace(np.array([1.001, 1.0, 1.0]), nondemocratic_lattice_basis())
    worst_ratio = max(r["ratio"] for r in trace)
    out.checks.append(Check("non-democratic lattice basis: ratio > 1", worst_ratio > 1, worst_ratio, 1.0))
    out.jsonl["greedy_trace.jsonl"] = [json.dumps(r, sort_keys=True) for r in trace]
    k = cfg.k or (1, 2, 3)
    params = construction.relaxed_params(cfg.q, k)
    p0 = cfg.p[0]
    fam = BlockAveragingFamily(params, p0).as_finite_basis()
    rep = analysis.kt_check(fam, samples=100, seed=cfg.seed)
    out.checks.append(Check(f"constructed family k={list(k)} p={p0}: forward KT", rep.kt_forward_ok,
                            rep.C_greedy_lower, rep.kt_upper))
    rows.append([f"family k={list(k)}", rep.K_uncond, rep.Delta_democracy, rep.C_greedy_lower, rep.kt_upper])
    out.tables["constants.csv"] = (["basis", "K", "Delta", "C_lower", "kt_upper"],
                                   [[r[0]] + [repr(float(x)) for x in r[1:]] for r in rows])
    return out


# ---- property (A) -----------------------------------------------------------

def max_sum_basis() -> FiniteBasis:
    """Canonical basis of R^3 under max(|a|, |b| + |c|)."""
    spec = SpaceSpec(1, "inf", Explicit([1, 2]))
    return FiniteBasis.canonical(spec, [(1, 1), (1, 2), (2, 2)])


def nondemocratic_lattice_basis() -> FiniteBasis:
    """e_1, e_2 in one Euclidean block and e_3 alone, the blocks l_1-summed."""
    spec = SpaceSpec(2, 1, Explicit([2, 1]))
    return FiniteBasis.canonical(spec, [(1, 1), (2, 1), (1, 2)])


def skewed_pair_basis() -> FiniteBasis:
    """{e_1, (e_1 + e_2)/sqrt 2} in the Euclidean plane."""
    spec = SpaceSpec(2, 2, Uniform(2))
    return FiniteBasis.from_columns(spec, [(1, 1), (2, 1)], [[1.0, 1.0], [0.0, 1.0]])


def exp_property_a(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    for p in cfg.p:
        for N in range(1, 6):
            basis = FiniteBasis.canonical(SpaceSpec(p, 1, Uniform(N)), [(i, 1) for i in range(1, N + 1)])
            rep = analysis.one_greedy_check(basis, samples=30, seed=cfg.seed)
            out.checks.append(Check(f"canonical l_{p}^{N} is 1-greedy", rep.passed,
                                    rep.property_a.max_deviation, 1e-12))
    rep = analysis.one_greedy_check(max_sum_basis(), samples=30, seed=cfg.seed)
    out.checks.append(Check("max(|a|,|b|+|c|) fails property (A)",
                            "property_A" in rep.failed and bool(rep.property_a.witnesses),
                            rep.property_a.max_deviation, 1e-12))
    out.jsonl["property_a_witnesses.jsonl"] = [rep.property_a.to_json()]
    rep = analysis.one_greedy_check(skewed_pair_basis(), samples=30, seed=cfg.seed)
    out.checks.append(Check("{e1,(e1+e2)/sqrt2} fails suppression", "suppression" in rep.failed,
                            rep.suppression, 1 + 1e-12))
    return out


# ---- maximal operator -------------------------------------------------------

def _random_sequence(rng) -> np.ndarray:
    L = int(rng.integers(1, 64))
    a = rng.standard_normal(L)
    if rng.random() < 0.3:
        a *= rng.random(L) < 0.3
    if not a.any():
        a[-1] = 1.0
    return a


def _maximal_chunk(task) -> dict:
    seed, count = task
    rng = np.random.default_rng(seed)
    worst = {"pointwise": 0.0, "sublinear": 0.0, "homogeneous": 0.0, "fast_vs_reference": 0.0,
             "domination_fail": 0}
    for _ in range(count):
        a, b = _random_sequence(rng), _random_sequence(rng)
        L = max(len(a), len(b))
        Ma = maximal.hl_maximal(a, length=L)
        Mb = maximal.hl_maximal(b, length=L)
        pa = np.zeros(L)
        pa[:len(a)] = a
        pb = np.zeros(L)
        pb[:len(b)] = b
        worst["pointwise"] = max(worst["pointwise"], float(np.max(np.abs(pa) - Ma)))
        worst["sublinear"] = max(worst["sublinear"], float(np.max(maximal.hl_maximal(pa + pb) - Ma - Mb)))
        lam = float(rng.uniform(-4, 4))
        worst["homogeneous"] = max(worst["homogeneous"],
                                   float(np.max(np.abs(maximal.hl_maximal(lam * pa) - abs(lam) * Ma))
                                         / max(abs(lam) * Ma.max(), 1e-300)))
        worst["fast_vs_reference"] = max(worst["fast_vs_reference"],
                                         float(np.max(np.abs(Ma - maximal.hl_maximal_reference(pa)))))
        widths = [int(w) for w in rng.integers(1, 9, size=int(rng.integers(1, 3)))]
        if not maximal.averaging_domination_check(a, widths).ok:
            worst["domination_fail"] += 1
    return worst


def strong_type_table(q_values, count: int, seed: int) -> list[tuple]:
    """Per q: max full-line ratio and max difference between two range sizes."""
    rng = np.random.default_rng(seed)
    seqs = [_random_sequence(rng) for _ in range(count)]
    seqs.append(np.ones(16))
    seqs.append(np.array([1.0]))
    out = []
    for q in q_values:
        best, drift = 0.0, 0.0
        for a in seqs:
            r4, r8 = maximal.range_stability(a, q)
            best = max(best, r4, r8)
            drift = max(drift, abs(r4 - r8))
        out.append((q, best, drift, maximal.uncentered_norm_bound(q)))
    return out


def exp_maximal(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    count = 10_000 if cfg.subsets is None else cfg.subsets
    tasks = list(zip(chunk_seeds(cfg.seed), split(count)))
    worst: dict = {}
    for part in parallel_map(_maximal_chunk, tasks):
        for key, val in part.items():
            worst[key] = worst.get(key, 0) + val if key == "domination_fail" else max(worst.get(key, 0.0), val)
    out.checks += [
        Check("M(a) >= |a|", worst["pointwise"] <= 0.0, worst["pointwise"], 0.0),
        Check("sublinearity", worst["sublinear"] <= 1e-12, worst["sublinear"], 1e-12),
        Check("homogeneity", worst["homogeneous"] <= 1e-12, worst["homogeneous"], 1e-12),
        Check("fast path agrees with reference", worst["fast_vs_reference"] <= 1e-12,
              worst["fast_vs_reference"], 1e-12),
        Check("averaging domination", worst["domination_fail"] == 0, worst["domination_fail"], 0),
    ]
    rows = []
    prev = math.inf
    for q, best, drift, bound in strong_type_table((1.5, 2.0, 3.0), min(count, 1000), cfg.seed):
        out.checks.append(Check(f"strong type q={q} bounded", best <= bound + 1e-9, best, bound))
        out.checks.append(Check(f"strong type q={q} range-stable", drift <= 1e-6, drift, 1e-6))
        out.checks.append(Check(f"strong type q={q} below the q-1 blow-up", best <= prev, best, prev))
        prev = best
        rows.append([q, repr(best), repr(drift), repr(bound)])
    out.tables["strong_type.csv"] = (["q", "max_ratio", "range_drift", "reference_bound"], rows)
    sample = _random_sequence(np.random.default_rng(cfg.seed))
    Ms = maximal.hl_maximal(sample, length=4 * len(sample))
    out.tables["maximal_sample.csv"] = (
        ["j", "a_j", "M(a)_j"],
        [[j + 1, repr(float(sample[j])) if j < len(sample) else "0.0", repr(float(m))]
         for j, m in enumerate(Ms)])
    return out


# ---- non-democracy ----------------------------------------------------------

def exp_nondemocracy(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    m = cfg.m
    for p in cfg.p:
        pv = as_exponent(p)
        within_expected = 1.0 if pv.is_inf else m ** (1.0 / pv.value)
        for sum_type, across_expected in (("l1", float(m)), ("c0", 1.0)):
            rep = analysis.nondemocracy_demo(p, sum_type, m)
            ok = (abs(rep.within - within_expected) <= 1e-12 * within_expected
                  and abs(rep.across - across_expected) <= 1e-12 * across_expected)
            out.checks.append(Check(f"{sum_type} sum p={p} m={m}", ok, [rep.within, rep.across],
                                    [within_expected, across_expected]))
    blocks = 14
    basis = analysis.truncated_block_basis(cfg.p[0], "l1", blocks)
    rows = []
    for k in range(1, blocks + 1):
        hi, lo = analysis.fundamental_function(basis, k, mode="sampled", samples=200, seed=cfg.seed)
        rows.append([k, repr(hi), repr(lo)])
    out.tables["fundamental_l1_sum.csv"] = (["m", "phi_max", "phi_min"], rows)
    return out


RUNNERS = {
    "construct-and-verify": exp_construct_and_verify,
    "projection-norms": exp_projection_norms,
    "greedy-constants": exp_greedy_constants,
    "property-a": exp_property_a,
    "maximal": exp_maximal,
    "nondemocracy-demo": exp_nondemocracy,
}


def build_report(cfg: ExperimentConfig, outcome: Outcome, timestamp: float | None = None) -> dict:
    return {
        "experiment": cfg.experiment,
        "config": _jsonable(cfg.to_dict()),
        "checks": [c.to_dict() for c in outcome.checks],
        "timestamp": time.time() if timestamp is None else timestamp,
    }


def write_outputs(cfg: ExperimentConfig, report: dict, outcome: Outcome) -> list[Path]:
    import csv

    root = Path(cfg.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    path = root / f"{cfg.experiment}.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    written.append(path)
    for name, lines in outcome.jsonl.items():
        if lines:
            p = root / name
            p.write_text("".join(line + "\n" for line in lines))
            written.append(p)
    if cfg.format == "csv":
        tables = dict(outcome.tables)
        tables["checks.csv"] = (["name", "pass", "value", "bound"],
                                [[c["name"], c["pass"], json.dumps(c["value"]), json.dumps(c["bound"])]
                                 for c in report["checks"]])
        for name, (header, rows) in tables.items():
            p = root / name
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(rows)
            written.append(p)
    return written


def run(cfg: ExperimentConfig) -> tuple[dict, Outcome]:
    if cfg.experiment not in RUNNERS:
        raise ValueError(f"unknown experiment {cfg.experiment!r}")
    outcome = RUNNERS[cfg.experiment](cfg)
    report = build_report(cfg, outcome)
    if cfg.out_dir:
        write_outputs(cfg, report, outcome)
    return report, outcome
