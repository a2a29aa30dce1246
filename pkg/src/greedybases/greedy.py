"""
Thresholding greedy approximation against a finite basis.

Basis elements are numbered from 0.  A vector is passed either as a
:class:`SparseVector` in the span of the basis or directly as its coefficient
array.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, CoefficientRecoveryError, InconsistencyError
from .solve import minimize_residual
from .space import BlockLayout, SpaceSpec, SparseVector, norm

TIE_TOL = 1e-12
BRUTE_FORCE_CAP = 22
_CHUNK = 1 << 13


class FiniteBasis:
    """Normalized vectors of a mixed-norm space together with their duals.

    Disjointly supported families recover coefficients by reading one
    coordinate per element; otherwise the pseudo-inverse on the joint support
    serves as the biorthogonal system.
    """

    def __init__(self, elements: Sequence[SparseVector], spec: SpaceSpec, tol: float = 1e-10):
        elements = tuple(elements)
        if not elements:
            raise ValueError("a basis needs at least one element")
        self.spec = spec
        self.elements = elements
        self.layout = BlockLayout(set().union(*(e.support for e in elements)), spec)
        E = np.zeros((len(self.layout), len(elements)))
        for k, e in enumerate(elements):
            for idx, c in e.items():
                E[self.layout.position[idx], k] = c
        self.matrix = E
        norms = self.layout.norms(E.T)
        bad = np.flatnonzero(np.abs(norms - 1.0) > tol)
        if len(bad):
            raise ValueError(f"element {int(bad[0])} has norm {norms[bad[0]]!r}, expected 1")
        self.disjoint_supports = bool(((E != 0).sum(axis=1) <= 1).all())
        if self.disjoint_supports:
            dual = np.zeros(E.T.shape)
            for k in range(E.shape[1]):
                anchor = int(np.argmax(np.abs(E[:, k])))
                dual[k, anchor] = 1.0 / E[anchor, k]
        else:
            sv = np.linalg.svd(E, compute_uv=False)
            if len(elements) > E.shape[0] or sv[-1] <= 1e-12 * sv[0]:
                raise CoefficientRecoveryError("the elements are linearly dependent")
            dual = np.linalg.pinv(E)
        if not np.allclose(dual @ E, np.eye(len(elements)), atol=tol, rtol=0):
            raise CoefficientRecoveryError("biorthogonality check failed")
        self.dual = dual

    @classmethod
    def canonical(cls, spec: SpaceSpec, indices) -> "FiniteBasis":
        return cls([SparseVector.unit(i, n) for i, n in indices], spec)

    @classmethod
    def from_columns(cls, spec: SpaceSpec, indices, columns) -> "FiniteBasis":
        """Elements ``columns[:, k]`` on ``indices``, each rescaled to norm one."""
        columns = np.asarray(columns, dtype=float)
        elements = []
        for col in columns.T:
            v = SparseVector(zip(indices, col))
            elements.append(v / norm(v, spec))
        return cls(elements, spec)

    def __len__(self):
        return len(self.elements)

    @property
    def size(self) -> int:
        return len(self.elements)

    def coefficients(self, x) -> np.ndarray:
        if not isinstance(x, SparseVector):
            c = np.asarray(x, dtype=float)
            if c.shape != (self.size,):
                raise ValueError(f"expected {self.size} coefficients")
            return c
        outside = [k for k in x if k not in self.layout.position]
        if outside:
            raise CoefficientRecoveryError(f"{outside[0]} lies outside the span")
        values = self.layout.to_dense(x)
        c = self.dual @ values
        if np.max(np.abs(self.matrix @ c - values), initial=0.0) > 1e-9 * (1 + np.max(np.abs(values))):
            raise CoefficientRecoveryError("vector is not in the span of the basis")
        return c

    def synthesize(self, coeffs) -> SparseVector:
        return self.layout.to_sparse(self.matrix @ np.asarray(coeffs, dtype=float))

    def norm_of(self, coeffs) -> float:
        return float(self.layout.norms(self.matrix @ np.asarray(coeffs, dtype=float)))

    def norms_of(self, coeffs) -> np.ndarray:
        """Norms for a batch of coefficient rows ``coeffs[b, k]``."""
        return self.layout.norms(np.asarray(coeffs, dtype=float) @ self.matrix.T)

    def indicator_norm(self, indices) -> float:
        c = np.zeros(self.size)
        c[list(indices)] = 1.0
        return self.norm_of(c)

    def indicator_norms(self, masks) -> np.ndarray:
        return self.norms_of(np.asarray(masks, dtype=float))

    def home_block(self, k: int) -> int:
        return min(idx.n for idx in self.elements[k])


class GreedyOrder(NamedTuple):
    order: list
    ties: bool


def _has_ties(mags: np.ndarray, order: Sequence[int], tol: float) -> bool:
    m = mags[list(order)]
    m = m[m > 0]
    if len(m) < 2:
        return False
    return bool(np.any(m[:-1] - m[1:] <= tol * m[:-1]))


def greedy_order(x, basis: FiniteBasis, tie_tol: float = TIE_TOL) -> GreedyOrder:
    """Indices by decreasing coefficient magnitude; exact ties by index."""
    mags = np.abs(basis.coefficients(x))
    order = [int(k) for k in np.lexsort((np.arange(len(mags)), -mags))]
    return GreedyOrder(order, _has_ties(mags, order, tie_tol))


@dataclass(frozen=True)
class GreedySelection:
    x: np.ndarray
    n: int
    A_n: tuple
    G_n: SparseVector
    residual_norm: float
    tie_flag: bool


def _greedy_sets(mags: np.ndarray, n: int, order: Sequence[int], tol: float,
                 limit: int = 10_000) -> list[tuple]:
    # Every admissible choice of n largest coefficients, treating near-ties as ties.
    if n == 0:
        return [()]
    t = mags[order[n - 1]]
    band = tol * max(t, 1e-300)
    must = [k for k in order if mags[k] > t + band]
    tied = [k for k in order if abs(mags[k] - t) <= band]
    need = n - len(must)
    if math.comb(len(tied), need) > limit:
        raise CapacityError(f"{math.comb(len(tied), need)} tied greedy sets")
    return [tuple(must) + combo for combo in itertools.combinations(tied, need)]


def greedy_approximant(x, n: int, basis: FiniteBasis, ties: str = "first",
                       tie_tol: float = TIE_TOL) -> GreedySelection:
    """n-th greedy approximant.

    ``ties="first"`` uses the deterministic order; ``ties="worst"`` picks, among
    all admissible greedy sets, one with the largest residual.
    """
    c = basis.coefficients(x)
    if not 0 <= n <= basis.size:
        raise ValueError(f"n must lie in 0..{basis.size}")
    order, flag = greedy_order(c, basis, tie_tol)
    if ties == "first":
        A = tuple(order[:n])
    elif ties == "worst":
        cands = _greedy_sets(np.abs(c), n, order, tie_tol)
        masks = np.ones((len(cands), basis.size))
        for row, cand in enumerate(cands):
            masks[row, list(cand)] = 0.0
        A = cands[int(np.argmax(basis.norms_of(masks * c)))]
    else:
        raise ValueError("ties must be 'first' or 'worst'")
    kept = np.zeros_like(c)
    kept[list(A)] = c[list(A)]
    return GreedySelection(c, n, A, basis.synthesize(kept), basis.norm_of(c - kept), flag)


def _combination_masks(pool: Sequence[int], r: int, size: int):
    batch = []
    for combo in itertools.combinations(pool, r):
        batch.append(combo)
        if len(batch) == _CHUNK:
            yield batch
            batch = []
    if batch:
        yield batch


def restricted_sigma(c: np.ndarray, n: int, basis: FiniteBasis) -> float:
    """min over |A| = n inside the support of ||x - P_A x|| (the lattice formula)."""
    support = np.flatnonzero(c)
    if n >= len(support):
        return 0.0
    best = math.inf
    for batch in _combination_masks(support, n, basis.size):
        keep = np.ones((len(batch), basis.size))
        for row, combo in enumerate(batch):
            keep[row, list(combo)] = 0.0
        best = min(best, float(np.min(basis.norms_of(keep * c))))
    return best


def _dense_norm_fn(basis: FiniteBasis):
    layout = basis.layout
    return (lambda v: float(layout.norms(v))), layout.norming


def sigma_n_exact(x, n: int, basis: FiniteBasis, cap: int = BRUTE_FORCE_CAP,
                  tol: float = 1e-9) -> float:
    """Best n-term error by subset enumeration.

    Disjointly supported bases are 1-unconditional, so the best coefficients on
    a chosen set are the vector's own and only subsets of the support matter.
    Otherwise every n-subset of the basis gets a convex coefficient solve.
    """
    c = basis.coefficients(x)
    support = np.flatnonzero(c)
    if n <= 0:
        return basis.norm_of(c)
    if n >= len(support) and basis.disjoint_supports:
        return 0.0
    pool_size = len(support) if basis.disjoint_supports else basis.size
    if pool_size > cap:
        raise CapacityError(f"brute force over {pool_size} elements exceeds the cap of {cap}",
                            "use greedy_constant_estimate (sampling mode) instead")
    if basis.disjoint_supports:
        return restricted_sigma(c, n, basis)
    n = min(n, basis.size)
    r = basis.matrix @ c
    f, norming = _dense_norm_fn(basis)
    best = math.inf
    for A in itertools.combinations(range(basis.size), n):
        A = list(A)
        res = minimize_residual(basis.matrix[:, A], r, f, norming, a0=c[A], tol=tol)
        best = min(best, res.value)
        if best == 0.0:
            break
    return best


def lebesgue_ratio(x, n: int, basis: FiniteBasis, ties: str = "first") -> float:
    """``||x - G_n x|| / sigma_n(x)``."""
    c = basis.coefficients(x)
    if n == 0:
        return 1.0
    sel = greedy_approximant(c, n, basis, ties=ties)
    sigma = sigma_n_exact(c, n, basis)
    zero = 1e-12 * max(basis.norm_of(c), 1e-300)
    if sigma <= zero:
        if sel.residual_norm <= 1e-9 * max(basis.norm_of(c), 1e-300):
            return 1.0
        raise InconsistencyError(
            f"sigma_{n} = {sigma!r} but the greedy residual is {sel.residual_norm!r}")
    return sel.residual_norm / sigma


def greedy_trace(x, basis: FiniteBasis, n_max: int | None = None, ties: str = "first") -> list[dict]:
    """One record per n: greedy residual, sigma_n, their ratio and the tie flag."""
    c = basis.coefficients(x)
    n_max = basis.size if n_max is None else min(n_max, basis.size)
    out = []
    for n in range(n_max + 1):
        sel = greedy_approximant(c, n, basis, ties=ties)
        out.append({"n": n, "residual": sel.residual_norm, "sigma": sigma_n_exact(c, n, basis),
                    "ratio": lebesgue_ratio(c, n, basis, ties=ties), "ties": sel.tie_flag})
    return out


def lattice_ratios(c: np.ndarray, basis: FiniteBasis, ties: str = "first",
                   tie_tol: float = TIE_TOL) -> np.ndarray:
    """Lebesgue ratios for every n at once on a disjointly supported basis.

    Entry ``n`` of the result is the ratio for ``G_n``; n = 0 gives 1.
    """
    if not basis.disjoint_supports:
        raise ValueError("lattice_ratios needs disjointly supported elements")
    support = np.flatnonzero(c)
    s = len(support)
    if s > 16:
        raise CapacityError(f"support of {s} is too large for full subset tables")
    out = np.ones(basis.size + 1)
    if s == 0:
        return out
    bits = ((np.arange(1 << s)[:, None] >> np.arange(s)) & 1).astype(bool)
    keep = np.ones((1 << s, basis.size))
    keep[:, support] = ~bits
    resid = basis.norms_of(keep * c)
    sizes = bits.sum(axis=1)
    mags = np.abs(c[support])
    order, _ = greedy_order(c, basis, tie_tol)
    if ties == "worst":
        big = np.where(bits, mags, np.inf).min(axis=1)
        small = np.where(bits, -np.inf, mags).max(axis=1)
        admissible = big >= small - tie_tol * mags.max()
    pos = {int(k): b for b, k in enumerate(support)}
    zero = 1e-12 * resid[0]
    for n in range(1, s + 1):
        rows = sizes == n
        sigma = float(resid[rows].min())
        if ties == "worst":
            g = float(resid[rows & admissible].max())
        else:
            mask = 0
            for k in order[:n]:
                if k in pos:
                    mask |= 1 << pos[k]
            g = float(resid[mask])
        if sigma <= zero:
            if g > 1e-9 * resid[0]:
                raise InconsistencyError(f"sigma_{n} vanishes but the greedy residual is {g!r}")
            out[n] = 1.0
        else:
            out[n] = g / sigma
    return out


@dataclass(frozen=True)
class GreedyConstantEstimate:
    value: float
    method: str
    witness: tuple | None  # (coefficients, n)


def _sample_coefficients(M: int, rng, count: int) -> list[np.ndarray]:
    out = []
    kinds = ("gauss", "spikes", "ties", "levels")
    for t in range(count):
        kind = kinds[t % len(kinds)]
        if kind == "gauss":
            c = rng.standard_normal(M)
        elif kind == "spikes":
            c = np.zeros(M)
            k = int(rng.integers(1, M + 1))
            idx = rng.choice(M, size=k, replace=False)
            c[idx] = np.exp(rng.normal(0, 2, size=k)) * rng.choice((-1, 1), size=k)
        elif kind == "ties":
            c = rng.uniform(0.0, 0.9, size=M) * (rng.random(M) < 0.6)
            k = int(rng.integers(1, M + 1))
            idx = rng.choice(M, size=k, replace=False)
            c[idx] = 1.0 + 1e-13 * rng.standard_normal(k)
            c *= rng.choice((-1, 1), size=M)
        else:
            c = rng.choice((0.0, 1.0, 1.0 + 1e-10, 2.0), size=M)
        if not c.any():
            c[int(rng.integers(M))] = 1.0
        out.append(c)
    return out


def democracy_witness_vectors(basis, delta: float = 1e-10, m_max: int | None = None) -> list:
    """Vectors ``1_A + (1+delta) 1_{B \\ A}`` for extremal equal-size A, B.

    The greedy step removes ``B \\ A`` and leaves ``1_A``, so the Lebesgue ratio
    at ``n = |B \\ A|`` is about ``||1_A|| / ||1_B||``.
    """
    from .analysis import _fundamental_exact

    M = basis.size
    out = []
    for m in range(1, (m_max or M) + 1):
        _, _, A, B = _fundamental_exact(basis, m)
        c = np.zeros(M)
        c[list(A)] = 1.0
        extra = [k for k in B if k not in A]
        if not extra:
            continue
        c[extra] = 1.0 + delta
        out.append((c, len(extra)))
    return out


def greedy_constant_estimate(basis: FiniteBasis, samples: int = 200, seed: int = 0,
                             ties: str = "first", witnesses: bool = True,
                             max_support: int = 12) -> GreedyConstantEstimate:
    """Largest observed Lebesgue ratio; a lower bound for the greedy constant.

    Besides random coefficient patterns the sample includes democracy
    witnesses (for bases small enough to enumerate), which force the estimate
    up to at least the democracy constant.
    """
    rng = np.random.default_rng(seed)
    M = basis.size
    cases = [(c, None) for c in _sample_coefficients(M, rng, samples)]
    if witnesses and M <= 16:
        cases.extend(democracy_witness_vectors(basis))
    best, where = 1.0, None
    for c, only_n in cases:
        support = np.flatnonzero(c)
        if len(support) > max_support:
            keep = rng.choice(support, size=max_support, replace=False)
            trimmed = np.zeros(M)
            trimmed[keep] = c[keep]
            c, support = trimmed, np.sort(keep)
        if basis.disjoint_supports:
            ratios = lattice_ratios(c, basis, ties=ties)
            ns = [only_n] if only_n is not None else range(1, len(support) + 1)
            for n in ns:
                if ratios[n] > best:
                    best, where = float(ratios[n]), (c, n)
        else:
            ns = [only_n] if only_n is not None else range(1, len(support))
            for n in ns:
                r = lebesgue_ratio(c, n, basis, ties=ties)
                if r > best:
                    best, where = r, (c, n)
    return GreedyConstantEstimate(best, "sampled", where)
