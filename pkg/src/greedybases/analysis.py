"""
Structural constants of finite bases and the checks built on them.

Functions that measure a constant return a float; the ``measure_*`` variants
also say whether the value is exact or only a sampled lower bound.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import CapacityError
from .greedy import TIE_TOL, FiniteBasis, greedy_constant_estimate
from .space import Explicit, Growing, SpaceSpec, SparseVector, norm

UNCOND_EXACT_CAP = 20
DEMOCRACY_EXACT_CAP = 18
KT_TOL = 1e-9
_CHUNK = 1 << 13


@dataclass(frozen=True)
class Measured:
    value: float
    method: str  # "exact" or "sampled"
    witness: object = None


def _groups(basis) -> list[list[int]]:
    # Natural clusters of elements: outer blocks for a FiniteBasis, levels for the constructed family.
    if isinstance(basis, FiniteBasis):
        keyed = [basis.home_block(k) for k in range(basis.size)]
    elif hasattr(basis, "ids"):
        keyed = [id_.level for id_ in basis.ids]
    else:
        return [list(range(basis.size))]
    out: dict[int, list[int]] = {}
    for k, key in enumerate(keyed):
        out.setdefault(key, []).append(k)
    return list(out.values())


# ---- unconditionality and suppression ---------------------------------------

def _pattern_rows(M: int, kind: str):
    # Sign patterns fix the first sign (the ratio is even); subsets exclude the empty set.
    if kind == "signs":
        total = 1 << (M - 1)
        for start in range(0, total, _CHUNK):
            ids = np.arange(start, min(total, start + _CHUNK))
            bits = (ids[:, None] >> np.arange(M - 1)) & 1
            yield np.hstack([np.ones((len(ids), 1)), 1.0 - 2.0 * bits])
    else:
        total = 1 << M
        for start in range(1, total, _CHUNK):
            ids = np.arange(start, min(total, start + _CHUNK))
            yield ((ids[:, None] >> np.arange(M)) & 1).astype(float)


def _coefficient_samples(M: int, rng, count: int) -> list[np.ndarray]:
    out = [np.ones(M)]
    for t in range(count - 1):
        a = rng.standard_normal(M)
        if t % 3 == 1:
            a *= rng.random(M) < 0.5
        if t % 3 == 2:
            a = np.exp(rng.normal(0, 1.5, M)) * rng.choice((-1, 1), M)
        if not a.any():
            a[0] = 1.0
        out.append(a)
    return out


def _worst_pattern(basis: FiniteBasis, a: np.ndarray, kind: str, exact: bool, rng,
                   random_patterns: int = 512) -> tuple[float, np.ndarray]:
    base = basis.norm_of(a)
    M = basis.size
    best, arg = 1.0, np.ones(M)
    if exact:
        rows_iter = _pattern_rows(M, kind)
    elif kind == "signs":
        rows_iter = [rng.choice((-1.0, 1.0), size=(random_patterns, M))]
    else:
        rows_iter = [(rng.random((random_patterns, M)) < 0.5).astype(float)]
    for rows in rows_iter:
        vals = basis.norms_of(rows * a) / base
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, arg = float(vals[k]), rows[k].copy()
    return best, arg


def _refine(basis: FiniteBasis, pattern: np.ndarray, a0: np.ndarray) -> tuple[float, np.ndarray]:
    # Local ascent of ||pattern * a|| / ||a|| over a, by Nelder-Mead.
    def neg(a):
        d = basis.norm_of(a)
        return 0.0 if d == 0 else -basis.norm_of(pattern * a) / d

    res = minimize(neg, a0, method="Nelder-Mead",
                   options={"maxiter": 400 * len(a0), "xatol": 1e-10, "fatol": 1e-13})
    return -float(res.fun), res.x


def _pattern_constant(basis: FiniteBasis, kind: str, mode: str, samples: int, seed: int) -> Measured:
    if basis.disjoint_supports:
        # Lattice norm, one coordinate group per element: signs and deletions never increase it.
        return Measured(1.0, "exact", None)
    M = basis.size
    if mode == "auto":
        mode = "exact" if M <= UNCOND_EXACT_CAP else "sampled"
    if mode == "exact" and M > UNCOND_EXACT_CAP:
        raise CapacityError(f"exact enumeration needs at most {UNCOND_EXACT_CAP} elements, got {M}",
                            "use mode='sampled'")
    rng = np.random.default_rng(seed)
    found = []
    for a in _coefficient_samples(M, rng, samples):
        val, pat = _worst_pattern(basis, a, kind, mode == "exact", rng)
        found.append((val, pat, a))
    found.sort(key=lambda t: -t[0])
    best, witness = found[0][0], (found[0][1], found[0][2])
    for val, pat, a in found[:3]:
        r, a_opt = _refine(basis, pat, a)
        if r > best:
            best, witness = r, (pat, a_opt)
    # only the sign/subset enumeration is exhaustive; the coefficient supremum is sampled
    return Measured(max(best, 1.0), "sampled", witness)


def measure_unconditionality(basis: FiniteBasis, mode: str = "auto", samples: int = 64,
                             seed: int = 0) -> Measured:
    return _pattern_constant(basis, "signs", mode, samples, seed)


def measure_suppression(basis: FiniteBasis, mode: str = "auto", samples: int = 64,
                        seed: int = 0) -> Measured:
    return _pattern_constant(basis, "subsets", mode, samples, seed)


def unconditionality_constant(basis: FiniteBasis, mode: str = "auto", samples: int = 64,
                              seed: int = 0) -> float:
    """sup of ``||sum theta_i a_i x_i|| / ||sum a_i x_i||`` over signs and coefficients."""
    return measure_unconditionality(basis, mode, samples, seed).value


def suppression_constant(basis: FiniteBasis, mode: str = "auto", samples: int = 64,
                         seed: int = 0) -> float:
    """sup of ``||sum_{i in A} a_i x_i|| / ||sum a_i x_i||`` over subsets and coefficients."""
    return measure_suppression(basis, mode, samples, seed).value


# ---- democracy --------------------------------------------------------------

def _fundamental_exact(basis, m: int):
    M = basis.size
    hi, lo, arg_hi, arg_lo = -math.inf, math.inf, None, None
    combos = itertools.combinations(range(M), m)
    while True:
        batch = list(itertools.islice(combos, _CHUNK))
        if not batch:
            break
        masks = np.zeros((len(batch), M), dtype=bool)
        for row, c in enumerate(batch):
            masks[row, list(c)] = True
        vals = np.asarray(basis.indicator_norms(masks))
        i, j = int(np.argmax(vals)), int(np.argmin(vals))
        if vals[i] > hi:
            hi, arg_hi = float(vals[i]), batch[i]
        if vals[j] < lo:
            lo, arg_lo = float(vals[j]), batch[j]
    return hi, lo, arg_hi, arg_lo


def structured_sets(basis, m: int) -> list[tuple]:
    """Deterministic m-sets: packed into the largest clusters, and spread one per cluster."""
    groups = sorted(_groups(basis), key=lambda g: (-len(g), g[0]))
    packed = list(itertools.chain.from_iterable(groups))[:m]
    spread, depth = [], 0
    while len(spread) < m:
        row = [g[depth] for g in groups if depth < len(g)]
        if not row:
            break
        spread.extend(row[: m - len(spread)])
        depth += 1
    return [tuple(sorted(packed)), tuple(sorted(spread))]


def _fundamental_sampled(basis, m: int, samples: int, rng):
    M = basis.size
    sets = structured_sets(basis, m)
    sets += [tuple(sorted(rng.choice(M, size=m, replace=False))) for _ in range(samples)]
    masks = np.zeros((len(sets), M), dtype=bool)
    for row, s in enumerate(sets):
        masks[row, list(s)] = True
    vals = np.asarray(basis.indicator_norms(masks))
    i, j = int(np.argmax(vals)), int(np.argmin(vals))
    return float(vals[i]), float(vals[j]), sets[i], sets[j]


def _resolve_mode(M: int, mode: str) -> str:
    if mode == "auto":
        return "exact" if M <= DEMOCRACY_EXACT_CAP else "sampled"
    if mode == "exact" and M > DEMOCRACY_EXACT_CAP:
        raise CapacityError(f"exact democracy needs at most {DEMOCRACY_EXACT_CAP} elements, got {M}",
                            "use mode='sampled'")
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


def fundamental_function(basis, m: int, mode: str = "auto", samples: int = 2000,
                         seed: int = 0) -> tuple[float, float]:
    """(max, min) of ``||sum_{i in A} x_i||`` over ``|A| = m``."""
    if not 1 <= m <= basis.size:
        raise ValueError(f"m must lie in 1..{basis.size}")
    if _resolve_mode(basis.size, mode) == "exact":
        hi, lo, _, _ = _fundamental_exact(basis, m)
    else:
        hi, lo, _, _ = _fundamental_sampled(basis, m, samples, np.random.default_rng(seed))
    return hi, lo


def measure_democracy(basis, m_max: int | None = None, mode: str = "auto", samples: int = 2000,
                      seed: int = 0) -> Measured:
    M = basis.size
    m_max = M if m_max is None else min(m_max, M)
    mode = _resolve_mode(M, mode)
    rng = np.random.default_rng(seed)
    best, witness = 1.0, None
    for m in range(1, m_max + 1):
        if mode == "exact":
            hi, lo, A, B = _fundamental_exact(basis, m)
        else:
            hi, lo, A, B = _fundamental_sampled(basis, m, samples, rng)
        if hi / lo > best:
            best, witness = hi / lo, (m, A, B)
    return Measured(best, mode, witness)


def democracy_constant(basis, m_max: int | None = None, mode: str = "auto", samples: int = 2000,
                       seed: int = 0) -> float:
    """max over ``|A| = |B| <= m_max`` of ``||sum_A x_i|| / ||sum_B x_i||``."""
    return measure_democracy(basis, m_max, mode, samples, seed).value


def write_fundamental_csv(basis, path, m_max: int | None = None, mode: str = "auto",
                          samples: int = 2000, seed: int = 0) -> None:
    """CSV with columns ``m, phi_max, phi_min``."""
    m_max = basis.size if m_max is None else min(m_max, basis.size)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "phi_max", "phi_min"])
        for m in range(1, m_max + 1):
            hi, lo = fundamental_function(basis, m, mode, samples, seed)
            writer.writerow([m, repr(hi), repr(lo)])


# ---- Konyagin-Temlyakov -----------------------------------------------------

def kt_upper_bound(K: float, Delta: float) -> float:
    """Greedy constant guaranteed by K-unconditionality and Delta-democracy."""
    return K + K ** 3 * Delta


@dataclass(frozen=True)
class ConstantsReport:
    K_uncond: float
    K_suppression: float
    Delta_democracy: float
    C_greedy_lower: float
    kt_upper: float
    kt_forward_ok: bool
    # None when a converse check is skipped because a constant is only sampled
    kt_converse_K_ok: bool | None
    kt_converse_Delta_ok: bool | None
    methods: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.kt_forward_ok and self.kt_converse_K_ok is not False \
            and self.kt_converse_Delta_ok is not False

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def kt_check(basis: FiniteBasis, samples: int = 200, seed: int = 0, ties: str = "first",
             tol: float = KT_TOL) -> ConstantsReport:
    """Measure K, the suppression constant, Delta and C, and test both KT directions."""
    K = measure_unconditionality(basis, seed=seed)
    Ks = measure_suppression(basis, seed=seed)
    D = measure_democracy(basis, mode="exact" if basis.size <= DEMOCRACY_EXACT_CAP else "sampled",
                          seed=seed)
    C = greedy_constant_estimate(basis, samples=samples, seed=seed, ties=ties)
    upper = kt_upper_bound(K.value, D.value)
    exact = K.method == "exact" and D.method == "exact"
    return ConstantsReport(
        K_uncond=K.value,
        K_suppression=Ks.value,
        Delta_democracy=D.value,
        C_greedy_lower=C.value,
        kt_upper=upper,
        kt_forward_ok=C.value <= upper + tol,
        kt_converse_K_ok=(K.value <= C.value + tol) if exact else None,
        kt_converse_Delta_ok=(D.value <= C.value ** 2 + tol) if exact else None,
        methods={"K_uncond": K.method, "K_suppression": Ks.method,
                 "Delta_democracy": D.method, "C_greedy_lower": C.method},
    )


def random_lattice_basis(rng, max_dim: int = 8) -> FiniteBasis:
    """Weighted indicators of a random partition of the coordinates of a random mixed-norm space.

    Weights are uniform on [1, 2]; each element is normalized.
    """
    exps = [1, 1.5, 2, 3, "inf"]
    p = exps[int(rng.integers(len(exps)))]
    q = exps[int(rng.integers(len(exps)))]
    dims = [int(d) for d in rng.integers(1, 4, size=int(rng.integers(2, 5)))]
    spec = SpaceSpec(p, q, Explicit(dims))
    coords = [(i, n) for n, d in enumerate(dims, start=1) for i in range(1, d + 1)]
    M = int(rng.integers(2, min(max_dim, len(coords)) + 1))
    perm = rng.permutation(len(coords))
    cuts = np.sort(rng.choice(np.arange(1, len(coords)), size=M - 1, replace=False))
    elements = []
    for part in np.split(perm, cuts):
        v = SparseVector({coords[c]: float(rng.uniform(1.0, 2.0)) for c in part})
        elements.append(v / norm(v, spec))
    return FiniteBasis(elements, spec)


# ---- property (A) and the 1-greedy test -------------------------------------

def _ambient(support: Sequence[int], M: int, ambient_size: int | None) -> list[int]:
    s = len(support)
    if ambient_size is None:
        ambient_size = min(M, s + 4)
    if ambient_size < s:
        raise ValueError(f"ambient size {ambient_size} is smaller than the support ({s})")
    if ambient_size > M:
        raise ValueError(f"ambient size {ambient_size} exceeds the basis size {M}")
    inside = set(support)
    free = [k for k in range(M) if k not in inside][: ambient_size - s]
    return sorted(inside.union(free))


def argmax_set(c: np.ndarray, tie_tol: float = TIE_TOL) -> list[int]:
    mags = np.abs(c)
    top = float(mags.max())
    if top == 0:
        return []
    return [int(k) for k in np.flatnonzero(mags >= top * (1 - tie_tol))]


def greedy_permutations(x, basis: FiniteBasis, ambient_size: int | None = None,
                        tie_tol: float = TIE_TOL) -> Iterator[dict]:
    """Greedy permutations of x, as maps ``{j: pi(j)}`` on the argmax set.

    Every other support index is fixed; each argmax index stays or moves to a
    distinct index of the ambient range outside the support.
    """
    c = basis.coefficients(x)
    support = [int(k) for k in np.flatnonzero(c)]
    ambient = _ambient(support, basis.size, ambient_size)
    free = [k for k in ambient if k not in set(support)]
    tops = argmax_set(c, tie_tol)
    for moved in range(len(tops) + 1):
        for who in itertools.combinations(tops, moved):
            for dest in itertools.permutations(free, moved):
                target = dict(zip(who, dest))
                yield {j: target.get(j, j) for j in tops}


@dataclass
class PropertyAReport:
    tested: int
    max_deviation: float
    tol: float
    witnesses: list = field(default_factory=list)  # (coefficients, permutation, signs)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol

    def to_json(self) -> str:
        body = {"tested": self.tested, "max_deviation": self.max_deviation, "tol": self.tol,
                "pass": self.passed,
                "witnesses": [{"x": list(map(float, x)), "permutation": {str(k): v for k, v in pi.items()},
                               "signs": list(map(float, s))} for x, pi, s in self.witnesses]}
        return json.dumps(body, sort_keys=True)


def property_A_vectors(basis: FiniteBasis, count: int, seed: int = 0) -> list[np.ndarray]:
    """Coefficient vectors with a tied maximum and room outside the support."""
    rng = np.random.default_rng(seed)
    M = basis.size
    out = []
    for _ in range(count):
        s = int(rng.integers(1, max(M, 2))) if M > 1 else 1
        support = rng.choice(M, size=s, replace=False)
        r = int(rng.integers(1, s + 1))
        c = np.zeros(M)
        c[support] = rng.uniform(0.1, 0.9, size=s)
        c[support[:r]] = 1.0
        out.append(c * rng.choice((-1.0, 1.0), size=M))
    return out


def property_A_check(basis: FiniteBasis, vectors: Iterable | None = None, samples: int = 50,
                     seed: int = 0, tol: float = 1e-12, ambient_size: int | None = None,
                     max_witnesses: int = 5) -> PropertyAReport:
    """Compare ``||x||`` with every signed greedy rearrangement of x.

    Deviations are relative to ``||x||``.
    """
    if vectors is None:
        vectors = property_A_vectors(basis, samples, seed)
    report = PropertyAReport(0, 0.0, tol)
    for x in vectors:
        c = basis.coefficients(x)
        base = basis.norm_of(c)
        if base == 0:
            continue
        report.tested += 1
        for pi in greedy_permutations(c, basis, ambient_size):
            moved = [j for j, t in pi.items() if t != j]
            signs = np.array(list(itertools.product((1.0, -1.0), repeat=len(moved))))
            rows = np.tile(c, (len(signs), 1))
            for col, j in enumerate(moved):
                rows[:, j] = 0.0
                rows[:, pi[j]] = signs[:, col] * c[j]
            dev = np.abs(basis.norms_of(rows) - base) / base
            k = int(np.argmax(dev))
            report.max_deviation = max(report.max_deviation, float(dev[k]))
            if dev[k] > tol and len(report.witnesses) < max_witnesses:
                report.witnesses.append((c.copy(), dict(pi), signs[k].copy()))
    return report


@dataclass
class OneGreedyReport:
    passed: bool
    suppression: float
    suppression_method: str
    suppression_ok: bool
    property_a: PropertyAReport
    failed: list

    def to_json(self) -> str:
        return json.dumps({"pass": self.passed, "suppression": self.suppression,
                           "suppression_method": self.suppression_method,
                           "suppression_ok": self.suppression_ok,
                           "property_a": json.loads(self.property_a.to_json()),
                           "failed": self.failed}, sort_keys=True)


def one_greedy_check(basis: FiniteBasis, vectors: Iterable | None = None, samples: int = 50,
                     seed: int = 0, tol: float = 1e-12) -> OneGreedyReport:
    """1-suppression unconditionality together with property (A)."""
    supp = measure_suppression(basis, seed=seed)
    pa = property_A_check(basis, vectors, samples=samples, seed=seed, tol=tol)
    supp_ok = supp.value <= 1 + tol
    failed = [leg for leg, ok in (("suppression", supp_ok), ("property_A", pa.passed)) if not ok]
    return OneGreedyReport(not failed, supp.value, supp.method, supp_ok, pa, failed)


# ---- non-democracy of l_1 and c_0 sums --------------------------------------

@dataclass(frozen=True)
class NondemocracyReport:
    p: object
    sum_type: str
    m: int
    within: float
    across: float

    @property
    def ratio(self) -> float:
        return max(self.within, self.across) / min(self.within, self.across)


def block_sum_spec(p, sum_type: str) -> SpaceSpec:
    """The sum of l_p^n over n = 1, 2, ... in the l_1 or c_0 sense."""
    outer = {"l1": 1, "c0": "inf"}.get(sum_type)
    if outer is None:
        raise ValueError("sum_type must be 'l1' or 'c0'")
    return SpaceSpec(p, outer, Growing())


def nondemocracy_demo(p, sum_type: str, m: int, block_budget: int = 10_000) -> NondemocracyReport:
    """Norms of m unit vectors packed into block m versus spread over blocks 1..m."""
    if not 1 <= m <= block_budget:
        raise ValueError(f"m must lie in 1..{block_budget}")
    spec = block_sum_spec(p, sum_type)
    within = SparseVector({(i, m): 1.0 for i in range(1, m + 1)})
    across = SparseVector({(1, n): 1.0 for n in range(1, m + 1)})
    return NondemocracyReport(spec.p, sum_type, m, norm(within, spec), norm(across, spec))


def truncated_block_basis(p, sum_type: str, blocks: int) -> FiniteBasis:
    """Canonical basis of the first ``blocks`` blocks of the l_1 or c_0 sum."""
    spec = block_sum_spec(p, sum_type)
    return FiniteBasis.canonical(spec, [(i, n) for n in range(1, blocks + 1) for i in range(1, n + 1)])
