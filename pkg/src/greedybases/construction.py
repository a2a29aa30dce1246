"""
The block-averaging greedy basis of l_q(l_p^N).

Level ``i`` of the family consists of the vectors

    x_(i,j) = n_i^(-1/q) * sum_{s=1}^{n_i} e_(i, s + (j-1) n_i),   1 <= j <= n_N / n_i,

i.e. normalized flat bumps of width ``n_i`` sitting on inner coordinate ``i``
and spread across consecutive outer blocks.  The widths ``n_j = k_1 ... k_j``
come from integer sequences ``(m_i)``, ``(k_i)`` chosen against a decreasing
sequence ``(eps_i)``.  For any index set A the q-th power of the norm of the
sum over A lies within ``(1 -+ eps)|A|``, for every inner exponent p.

Norms of subset sums are evaluated without materializing the ``n_N`` outer
blocks: the blocks are cut into intervals on which the set of active levels
is constant.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, InvalidIndexError
from .space import (Exponent, SpaceSpec, SparseVector, Uniform, as_exponent,
                    dense_norm)

DEFAULT_CAP = 10 ** 9
DENSE_CAP = 10 ** 5
# The parameter inequalities on (m_i, k_i) are checked strictly with this guard.
STRICT_GUARD = 1e-12


class BasisElementId(NamedTuple):
    level: int
    position: int


@dataclass(frozen=True)
class ConstructionParams:
    q: Exponent
    N: int
    k_seq: tuple
    m_seq: tuple
    eps_seq: tuple | None = None
    target_eps: float | None = None
    relaxed: bool = False
    n_seq: tuple = field(init=False)

    def __post_init__(self):
        q = as_exponent(self.q)
        object.__setattr__(self, "q", q)
        if q.is_inf or q.value <= 1:
            raise ValueError("the construction needs a finite q > 1")
        k = tuple(int(x) for x in self.k_seq)
        m = tuple(int(x) for x in self.m_seq)
        if len(k) != self.N or len(m) != self.N:
            raise ValueError("k_seq and m_seq must have length N")
        if min(k) < 1:
            raise ValueError("every k_i must be a positive integer")
        object.__setattr__(self, "k_seq", k)
        object.__setattr__(self, "m_seq", m)
        if self.eps_seq is not None:
            object.__setattr__(self, "eps_seq", tuple(float(e) for e in self.eps_seq))
        n, acc = [], 1
        for ki in k:
            acc *= ki
            n.append(acc)
        object.__setattr__(self, "n_seq", tuple(n))
        if not self.relaxed:
            problems = condition_violations(self)
            if problems:
                raise ValueError("parameters violate the construction conditions: "
                                 + "; ".join(problems))

    @property
    def n_total(self) -> int:
        return self.n_seq[-1]

    def spec(self, p) -> SpaceSpec:
        return SpaceSpec(as_exponent(p), self.q, Uniform(self.N))

    def to_json(self) -> str:
        return json.dumps({"q": self.q.to_json(), "N": self.N,
                           "eps": list(self.eps_seq) if self.eps_seq else None,
                           "m": list(self.m_seq), "k": list(self.k_seq),
                           "n": list(self.n_seq), "target_eps": self.target_eps,
                           "relaxed": self.relaxed})

    @classmethod
    def from_json(cls, text: str) -> "ConstructionParams":
        obj = json.loads(text)
        params = cls(Exponent(obj["q"]), int(obj["N"]), tuple(obj["k"]), tuple(obj["m"]),
                     tuple(obj["eps"]) if obj.get("eps") else None,
                     obj.get("target_eps"), bool(obj.get("relaxed", False)))
        if "n" in obj and list(params.n_seq) != list(obj["n"]):
            raise ValueError("n does not equal the running product of k")
        return params


# -- parameter selection -----------------------------------------------------

def _cond_m(m: int, e: float, q: float) -> bool:
    r = m ** (1.0 / q)
    return (m - 1.0 / e > STRICT_GUARD
            and (1.0 + e) ** (1.0 / q) * r - (r + 1.0) > STRICT_GUARD)


def _cond_k(k: int, m: int, e: float, q: float) -> bool:
    t = (m / k) ** (1.0 / q)
    if t >= 1.0:
        return False
    return ((1.0 + e) - (1.0 + t) ** q > STRICT_GUARD
            and (1.0 - t) ** q - (1.0 - e) > STRICT_GUARD)


def _least_int(pred, start: int = 1) -> int:
    # Smallest integer >= start satisfying a monotone predicate.
    if pred(start):
        return start
    lo, hi = start, max(2 * start, 2)
    while not pred(hi):
        lo, hi = hi, 2 * hi
        if hi > 1 << 80:
            raise CapacityError("no integer satisfies the condition below 2**80")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def condition_violations(params: ConstructionParams) -> list[str]:
    """Human-readable list of failed construction conditions (empty if none)."""
    out = []
    if params.m_seq[0] != 1 or params.k_seq[0] != 1:
        out.append("m_1 = k_1 = 1 is required")
    if params.eps_seq is None:
        out.append("eps_seq is required outside relaxed mode")
        return out
    q = params.q.value
    for i in range(1, params.N):
        m, k, e = params.m_seq[i], params.k_seq[i], params.eps_seq[i]
        if not _cond_m(m, e, q):
            out.append(f"level {i + 1}: m={m} fails 1/eps < m or ((1+eps)m)^(1/q) > m^(1/q) + 1")
        if not _cond_k(k, m, e, q):
            out.append(f"level {i + 1}: k={k} fails (1 +- (m/k)^(1/q))^q inside (1 - eps, 1 + eps)")
    if params.target_eps is not None:
        up = math.prod(1 + e for e in params.eps_seq)
        lo = math.prod(1 - e for e in params.eps_seq)
        if not (up < 1 + params.target_eps and lo > 1 - params.target_eps):
            out.append("eps products are not inside (1 - eps, 1 + eps)")
    return out


def _eps_products_ok(c: float, eps: float, N: int, margin: float) -> bool:
    seq = [c * eps * 2.0 ** -i for i in range(N)]
    up = math.prod(1 + e for e in seq)
    lo = math.prod(1 - e for e in seq)
    return up <= 1 + eps - margin and lo >= 1 - eps + margin


def choose_epsilons(eps: float, N: int) -> tuple:
    """Geometric sequence ``eps_i = c * eps * 2**-(i-1)``.

    ``c = 1/2`` when the N-term products already sit inside ``(1 - eps, 1 + eps)``
    with margin; otherwise ``c`` is the largest value (by bisection) that keeps
    both products inside with margin.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if N < 1:
        raise ValueError("N must be positive")
    margin = max(1e-9, min(1e-6, 1e-3 * eps))
    c = 0.5
    if not _eps_products_ok(c, eps, N, margin):
        lo, hi = 0.0, 0.5
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if _eps_products_ok(mid, eps, N, margin):
                lo = mid
            else:
                hi = mid
        c = lo
    return tuple(c * eps * 2.0 ** -i for i in range(N))


def select_parameters(q, eps_seq: Sequence[float], cap: int = DEFAULT_CAP):
    """Minimal ``(m_i)``, ``(k_i)`` satisfying the parameter inequalities, and ``n_j``.

    ``m_1 = k_1 = 1``.  For ``i >= 2``, ``m_i`` is the least integer with
    ``1/eps_i < m`` and ``((1+eps_i) m)^(1/q) > m^(1/q) + 1``, then ``k_i`` the least
    with ``(1 + t)^q < 1 + eps_i`` and ``(1 - t)^q > 1 - eps_i`` for
    ``t = (m_i/k_i)^(1/q)``.  All four conditions are
    monotone in the searched integer, so a doubling/bisection search returns the
    same integers as an ascending scan.
    """
    q = as_exponent(q)
    if q.is_inf or q.value <= 1:
        raise ValueError("q must be finite and > 1")
    qv = q.value
    m_seq, k_seq, n_seq = [1], [1], [1]
    for e in eps_seq[1:]:
        if e <= 0:
            raise ValueError("eps_i must be positive")
        m = _least_int(lambda m: _cond_m(m, e, qv), start=2)
        k = _least_int(lambda k: _cond_k(k, m, e, qv), start=m + 1)
        m_seq.append(m)
        k_seq.append(k)
        n_seq.append(n_seq[-1] * k)
        if n_seq[-1] > cap:
            raise CapacityError(
                f"n_{len(n_seq)} = {n_seq[-1]} exceeds the cap of {cap} virtual coordinates",
                "use a larger eps or fewer levels N")
    return tuple(m_seq), tuple(k_seq), tuple(n_seq)


def build_params(q, eps: float, N: int, cap: int = DEFAULT_CAP) -> ConstructionParams:
    eps_seq = choose_epsilons(eps, N)
    m, k, _ = select_parameters(q, eps_seq, cap)
    return ConstructionParams(as_exponent(q), N, k, m, eps_seq, eps)


def relaxed_params(q, k_seq: Sequence[int], m_seq: Sequence[int] | None = None,
                   eps: float | None = None) -> ConstructionParams:
    """Arbitrary widths; norms stay exact but the democracy bound is not promised."""
    m_seq = m_seq if m_seq is not None else [1] * len(k_seq)
    return ConstructionParams(as_exponent(q), len(k_seq), tuple(k_seq), tuple(m_seq),
                              None, eps, relaxed=True)


# -- the family --------------------------------------------------------------

def family_size(params: ConstructionParams) -> int:
    nN = params.n_total
    return sum(nN // ni for ni in params.n_seq)


def family_ids(params: ConstructionParams) -> list:
    nN = params.n_total
    return [BasisElementId(i, j)
            for i, ni in enumerate(params.n_seq, start=1)
            for j in range(1, nN // ni + 1)]


def _check_id(params: ConstructionParams, id_) -> BasisElementId:
    level, pos = id_
    if not 1 <= level <= params.N:
        raise InvalidIndexError(id_, f"level must lie in 1..{params.N}")
    count = params.n_total // params.n_seq[level - 1]
    if not 1 <= pos <= count:
        raise InvalidIndexError(id_, f"position must lie in 1..{count} at level {level}")
    return BasisElementId(level, pos)


def basis_vector(params: ConstructionParams, id_) -> SparseVector:
    level, j = _check_id(params, id_)
    ni = params.n_seq[level - 1]
    if ni > DENSE_CAP:
        raise CapacityError(f"element of width {ni} is too wide to materialize")
    c = ni ** (-1.0 / params.q.value)
    return SparseVector({(level, s + (j - 1) * ni): c for s in range(1, ni + 1)})


def support_window(params: ConstructionParams, id_) -> tuple[int, int, int]:
    """``(level, first_block, last_block)`` of an element's support."""
    level, j = _check_id(params, id_)
    ni = params.n_seq[level - 1]
    return level, (j - 1) * ni + 1, j * ni


@dataclass(frozen=True)
class SubsetNormCertificate:
    A: tuple
    p: Exponent
    exact_norm_q_power: float
    lower: float
    upper: float
    verdict: bool
    guaranteed: bool

    def to_json(self, include_ids: bool = True) -> str:
        obj = {"size": len(self.A), "p": self.p.to_json(),
               "exact_norm_q_power": self.exact_norm_q_power,
               "lower": self.lower, "upper": self.upper,
               "verdict": self.verdict, "guaranteed": self.guaranteed}
        if include_ids:
            obj["A"] = [list(a) if isinstance(a, tuple) else a for a in self.A]
        return json.dumps(obj)


def _group_by_level(params: ConstructionParams, A: Iterable) -> dict:
    levels: dict[int, list[int]] = {}
    for id_ in A:
        level, pos = _check_id(params, id_)
        levels.setdefault(level, []).append(pos - 1)
    return {lvl: np.unique(np.asarray(pos, dtype=np.int64)) for lvl, pos in levels.items()}


def family_offsets(params: ConstructionParams) -> np.ndarray:
    """Start of each level in the level-major numbering of :func:`family_ids`."""
    counts = [params.n_total // ni for ni in params.n_seq]
    return np.concatenate(([0], np.cumsum(counts))).astype(np.int64)


def _group_indices(params: ConstructionParams, idx) -> dict:
    idx = np.unique(np.asarray(idx, dtype=np.int64))
    offsets = family_offsets(params)
    if len(idx) and (idx[0] < 0 or idx[-1] >= offsets[-1]):
        bad = int(idx[0] if idx[0] < 0 else idx[-1])
        raise InvalidIndexError((bad,), f"family index must lie in 0..{int(offsets[-1]) - 1}")
    cuts = np.searchsorted(idx, offsets)
    return {lvl: idx[cuts[lvl - 1]:cuts[lvl]] - offsets[lvl - 1]
            for lvl in range(1, params.N + 1) if cuts[lvl] > cuts[lvl - 1]}


def indicator_norm_q_power(params: ConstructionParams, idx, p) -> float:
    """Like :func:`compressed_norm_q_power`, for 0-based family indices."""
    return _compressed(params, _group_indices(params, idx), as_exponent(p))


def compressed_norm_q_power(params: ConstructionParams, A: Iterable, p) -> float:
    """q-th power of the norm of the sum of the elements in ``A``.

    Works on breakpoints only; cost is O(N |A| log |A|) regardless of ``n_N``.
    """
    return _compressed(params, _group_by_level(params, A), as_exponent(p))


def _compressed(params: ConstructionParams, groups: dict, p: Exponent) -> float:
    if not groups:
        return 0.0
    q = params.q.value
    widths = params.n_seq
    ends = [np.array([0, params.n_total], dtype=np.int64)]
    for lvl, pos in groups.items():
        w = widths[lvl - 1]
        ends.append(pos * w)
        ends.append((pos + 1) * w)
    bps = np.unique(np.concatenate(ends))
    starts, lengths = bps[:-1], np.diff(bps)
    if p.is_inf:
        narrowest = np.full(starts.shape, np.inf)
    else:
        inner = np.zeros(starts.shape)
    for lvl, pos in groups.items():
        w = widths[lvl - 1]
        window = starts // w
        hit = np.searchsorted(pos, window)
        covered = (hit < len(pos)) & (pos[np.minimum(hit, len(pos) - 1)] == window)
        if p.is_inf:
            narrowest = np.where(covered, np.minimum(narrowest, w), narrowest)
        else:
            inner += covered * float(w) ** (-p.value / q)
    if p.is_inf:
        per_block = np.where(np.isfinite(narrowest), 1.0 / narrowest, 0.0)
    else:
        per_block = inner ** (q / p.value)
    return float(np.sum(lengths * per_block))


def dense_rectangle(params: ConstructionParams, A: Iterable) -> np.ndarray:
    """The sum over ``A`` as an ``(N, n_N)`` array (small instances only)."""
    if params.n_total > DENSE_CAP:
        raise CapacityError(f"n_N = {params.n_total} is too large to materialize",
                            f"dense evaluation is limited to n_N <= {DENSE_CAP}")
    rect = np.zeros((params.N, params.n_total))
    q = params.q.value
    for id_ in A:
        level, first, last = support_window(params, id_)
        rect[level - 1, first - 1:last] += params.n_seq[level - 1] ** (-1.0 / q)
    return rect


def dense_norm_q_power(params: ConstructionParams, A: Iterable, p) -> float:
    return float(dense_norm(dense_rectangle(params, A), p, params.q)) ** params.q.value


def subset_norm(params: ConstructionParams, A: Iterable, p, tol: float = 1e-9,
                eps: float | None = None) -> SubsetNormCertificate:
    """Exact norm of a subset sum with the democracy bracket ``(1 -+ eps)|A|``.

    ``tol`` is relative to ``|A|``.  In relaxed mode the bracket is still
    evaluated (against ``eps`` or the params' target) but is not guaranteed.
    """
    A = tuple(BasisElementId(*a) for a in A)
    if not A:
        raise ValueError("A must be nonempty")
    if len(set(A)) != len(A):
        raise ValueError("A must not repeat elements")
    value = compressed_norm_q_power(params, A, p)
    return _certificate(params, A, p, value, tol, eps)


def _bracket_eps(params: ConstructionParams, eps: float | None) -> float:
    eps = params.target_eps if eps is None else eps
    if eps is None:
        if params.eps_seq is None:
            raise ValueError("no eps available for the democracy bracket")
        eps = max(math.prod(1 + e for e in params.eps_seq[1:]) - 1,
                  1 - math.prod(1 - e for e in params.eps_seq[1:]))
    return eps


def _certificate(params, A, p, value, tol, eps) -> SubsetNormCertificate:
    eps = _bracket_eps(params, eps)
    lower, upper = (1 - eps) * len(A), (1 + eps) * len(A)
    slack = tol * len(A)
    verdict = lower - slack <= value <= upper + slack
    return SubsetNormCertificate(tuple(A), as_exponent(p), value, lower, upper, verdict,
                                 guaranteed=not params.relaxed)


def subset_norm_indices(params: ConstructionParams, idx, p, tol: float = 1e-9,
                        eps: float | None = None) -> SubsetNormCertificate:
    """:func:`subset_norm` for distinct 0-based family indices.

    The certificate's ``A`` holds the indices rather than element ids.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) == 0:
        raise ValueError("A must be nonempty")
    groups = _group_indices(params, idx)
    if sum(len(g) for g in groups.values()) != len(idx):
        raise ValueError("A must not repeat elements")
    value = _compressed(params, groups, as_exponent(p))
    return _certificate(params, idx.tolist(), p, value, tol, eps)


def y_vector(params: ConstructionParams, level: int) -> SparseVector:
    if not 1 <= level <= params.N:
        raise InvalidIndexError((level, 1), f"level must lie in 1..{params.N}")
    nN = params.n_total
    if nN > DENSE_CAP:
        raise CapacityError(f"y vector has {nN} coordinates")
    c = nN ** (-1.0 / params.q.value)
    return SparseVector({(level, j): c for j in range(1, nN + 1)})


def y_dense(params: ConstructionParams, coeffs: Sequence[float]) -> np.ndarray:
    """``sum_i a_i y_i`` as an ``(N, n_N)`` rectangle."""
    a = np.asarray(coeffs, dtype=float)
    if a.shape != (params.N,):
        raise ValueError(f"expected {params.N} coefficients")
    nN = params.n_total
    if nN > DENSE_CAP:
        raise CapacityError(f"n_N = {nN} is too large to materialize")
    return np.repeat((a * nN ** (-1.0 / params.q.value))[:, None], nN, axis=1)


# -- averaging projections ---------------------------------------------------

def T_X_dense(params: ConstructionParams, arr) -> np.ndarray:
    """Average each level over its own windows of width ``n_i``."""
    arr = np.asarray(arr, dtype=float)
    if arr.shape[-2:] != (params.N, params.n_total):
        raise ValueError("array must end with shape (N, n_N)")
    out = np.empty_like(arr)
    lead = arr.shape[:-2]
    for lvl, w in enumerate(params.n_seq):
        row = arr[..., lvl, :].reshape(lead + (params.n_total // w, w))
        avg = row.mean(axis=-1, keepdims=True)
        out[..., lvl, :] = np.broadcast_to(avg, row.shape).reshape(lead + (params.n_total,))
    return out


def T_Y_dense(params: ConstructionParams, arr) -> np.ndarray:
    """Average each level over all ``n_N`` outer blocks."""
    arr = np.asarray(arr, dtype=float)
    if arr.shape[-2:] != (params.N, params.n_total):
        raise ValueError("array must end with shape (N, n_N)")
    return np.broadcast_to(arr.mean(axis=-1, keepdims=True), arr.shape).copy()


def _to_rect(params: ConstructionParams, v: SparseVector) -> np.ndarray:
    if params.n_total > DENSE_CAP:
        raise CapacityError(f"n_N = {params.n_total} is too large to materialize")
    rect = np.zeros((params.N, params.n_total))
    for (i, n), c in v.items():
        if not (1 <= i <= params.N and 1 <= n <= params.n_total):
            raise InvalidIndexError((i, n), "outside the N x n_N rectangle")
        rect[i - 1, n - 1] = c
    return rect


def _from_rect(rect: np.ndarray) -> SparseVector:
    rows, cols = np.nonzero(rect)
    return SparseVector({(int(i) + 1, int(n) + 1): rect[i, n] for i, n in zip(rows, cols)})


def apply_T_X(params: ConstructionParams, v: SparseVector) -> SparseVector:
    return _from_rect(T_X_dense(params, _to_rect(params, v)))


def apply_T_Y(params: ConstructionParams, v: SparseVector) -> SparseVector:
    return _from_rect(T_Y_dense(params, _to_rect(params, v)))


def _adversarial_profiles(nN: int, widths: Sequence[int], q: float, rng, count: int):
    """Nonnegative outer profiles concentrated near window boundaries."""
    marks = sorted({b for w in widths for b in range(0, nN, w)} | {nN - 1})
    out = []
    for _ in range(count):
        t = int(rng.choice(marks))
        shape = rng.integers(3)
        j = np.arange(nN)
        if shape == 0:
            a = (j == t).astype(float)
        elif shape == 1:
            a = 1.0 / (np.abs(j - t) + 1.0) ** (1.0 / q)
            a[j < t] = 0.0
        else:
            width = int(rng.integers(1, max(2, nN // 2)))
            a = ((j >= t) & (j < t + width)).astype(float)
        out.append(a)
    return out


def operator_norm_lower_bound(params: ConstructionParams, which: str, p, samples: int = 2000,
                              seed: int = 0, batch: int = 256) -> float:
    """Largest observed ``norm(T v) / norm(v)`` over a deterministic sample.

    The sample mixes Gaussian vectors, sparse vectors, single spikes at window
    boundaries, level-aligned bump/tail profiles, and (for ``p = inf``) random
    extreme points of the unit ball.
    """
    from .space import extreme_point_arrays

    if which not in ("T_X", "T_Y"):
        raise ValueError("which must be 'T_X' or 'T_Y'")
    op = T_X_dense if which == "T_X" else T_Y_dense
    p = as_exponent(p)
    N, nN, q = params.N, params.n_total, params.q
    if N * nN > 4 * DENSE_CAP:
        raise CapacityError(f"{N} x {nN} rectangle is too large for sampling")
    rng = np.random.default_rng(seed)
    best = 0.0

    def consume(vs):
        nonlocal best
        vs = np.asarray(vs, dtype=float)
        num = dense_norm(op(params, vs), p, q)
        den = dense_norm(vs, p, q)
        ok = den > 0
        if ok.any():
            best = max(best, float(np.max(num[ok] / den[ok])))

    per_kind = max(1, samples // 4)
    done = 0
    while done < per_kind:
        b = min(batch, per_kind - done)
        consume(rng.standard_normal((b, N, nN)))
        sparse = rng.standard_normal((b, N, nN)) * (rng.random((b, N, nN)) < 3.0 / (N * nN) + 0.05)
        consume(sparse)
        done += b
    spikes = []
    for lvl in range(N):
        for start in sorted({b for w in params.n_seq for b in range(0, nN, w)})[:batch]:
            v = np.zeros((N, nN))
            v[lvl, start] = 1.0
            spikes.append(v)
    if spikes:
        consume(spikes)
    profiles = _adversarial_profiles(nN, params.n_seq, q.value, rng, per_kind)
    for k in range(0, len(profiles), batch):
        chunk = profiles[k:k + batch]
        consume([np.tile(a, (N, 1)) for a in chunk])
    if p.is_inf:
        pts = []
        for pt in extreme_point_arrays(params.spec(p), (N, nN), per_kind, rng):
            pts.append(pt)
            if len(pts) == batch:
                consume(pts)
                pts = []
        if pts:
            consume(pts)
    return best


class BlockAveragingFamily:
    """The constructed family viewed as a basis, evaluated with the compressed norm."""

    def __init__(self, params: ConstructionParams, p):
        self.params = params
        self.p = as_exponent(p)
        self.ids = family_ids(params)
        self._pos = {id_: k for k, id_ in enumerate(self.ids)}

    def __len__(self):
        return len(self.ids)

    @property
    def size(self) -> int:
        return len(self.ids)

    def index_of(self, id_) -> int:
        return self._pos[BasisElementId(*id_)]

    def indicator_norm(self, indices: Iterable[int]) -> float:
        return indicator_norm_q_power(self.params, list(indices), self.p) ** (1.0 / self.params.q.value)

    def indicator_norms(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=bool)
        return np.array([self.indicator_norm(np.flatnonzero(m)) for m in masks])

    def as_finite_basis(self):
        from .greedy import FiniteBasis

        return FiniteBasis([basis_vector(self.params, id_) for id_ in self.ids],
                           self.params.spec(self.p))
