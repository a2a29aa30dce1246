"""
Discrete uncentered Hardy-Littlewood maximal operator on sequences.

    M(a)_j = sup_{m <= j <= n} (|a_m| + ... + |a_n|) / (n - m + 1)

Sequences are finitely supported and 1-indexed in the mathematical sense
(``a[0]`` is ``a_1``).  Because windows that run past the support only pick
up zeros, ``M(a)_j`` does not depend on how far the sequence is padded; the
``length`` argument only controls how many output values are returned.

Window averages are slopes of the prefix-sum polygon ``P``: the window
``[u+1, v]`` has average ``(P[v] - P[u]) / (v - u)``.  The fast path uses this
to answer all windows crossing a split point with convex-hull tangent
queries.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta

_BRUTE_BELOW = 48


def _prefix(a, length: int | None) -> tuple[np.ndarray, int]:
    a = np.abs(np.asarray(a, dtype=float).ravel())
    R = max(len(a), length or 0)
    if R == 0:
        raise ValueError("empty sequence")
    padded = np.zeros(R)
    padded[:len(a)] = a
    return np.concatenate(([0.0], np.cumsum(padded))), R


def _brute(P: np.ndarray, lo: int, hi: int, out: np.ndarray) -> None:
    # All windows [u+1, v] with lo <= u < v <= hi.
    for u in range(lo, hi):
        v = np.arange(u + 1, hi + 1)
        avg = (P[v] - P[u]) / (v - u)
        suffix = np.maximum.accumulate(avg[::-1])[::-1]
        np.maximum(out[u:hi], suffix, out=out[u:hi])


def _with_singletons(out: np.ndarray, a) -> np.ndarray:
    # Singleton windows exactly, free of prefix-sum rounding.
    a = np.abs(np.asarray(a, dtype=float).ravel())
    np.maximum(out[:len(a)], a, out=out[:len(a)])
    return out


def hl_maximal_reference(a, length: int | None = None) -> np.ndarray:
    """O(R^2) evaluation over every window; the oracle for the fast path."""
    P, R = _prefix(a, length)
    out = np.zeros(R)
    _brute(P, 0, R, out)
    return _with_singletons(out, a)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _upper_hull(pts):
    hull = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    return hull


def _lower_hull(pts):
    hull = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def _slope(a, b) -> float:
    return (b[1] - a[1]) / (b[0] - a[0])


def _best_right(hull, q) -> float:
    # Max slope from q to a point of an upper hull lying entirely right of q.
    lo, hi = 0, len(hull) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _slope(q, hull[mid]) < _slope(q, hull[mid + 1]):
            lo = mid + 1
        else:
            hi = mid
    return _slope(q, hull[lo])


def _best_left(hull, q) -> float:
    # Max slope to q from a point of a lower hull lying entirely left of q.
    lo, hi = 0, len(hull) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _slope(hull[mid], q) < _slope(hull[mid + 1], q):
            lo = mid + 1
        else:
            hi = mid
    return _slope(hull[lo], q)


def _solve(P: np.ndarray, lo: int, hi: int, out: np.ndarray) -> None:
    if hi - lo <= _BRUTE_BELOW:
        _brute(P, lo, hi, out)
        return
    mid = (lo + hi) // 2
    _solve(P, lo, mid, out)
    _solve(P, mid, hi, out)
    left = [(float(u), float(P[u])) for u in range(lo, mid)]
    right = [(float(v), float(P[v])) for v in range(mid + 1, hi + 1)]
    upper = _upper_hull(right)
    lower = _lower_hull(left)
    # j in [lo+1, mid]: any u <= j-1 paired with any v > mid.
    best = -math.inf
    for u, pt in zip(range(lo, mid), left):
        best = max(best, _best_right(upper, pt))
        out[u] = max(out[u], best)  # out[u] is M(a)_{u+1}
    # j in [mid+1, hi]: any u < mid paired with any v >= j.
    best = -math.inf
    for v in range(hi, mid, -1):
        best = max(best, _best_left(lower, (float(v), float(P[v]))))
        out[v - 1] = max(out[v - 1], best)


def hl_maximal(a, length: int | None = None, method: str = "fast") -> np.ndarray:
    """First ``max(len(a), length)`` values of the maximal function of ``a``.

    ``method="fast"`` splits the index range recursively and handles windows
    crossing each split with hull tangent queries, O(R log^2 R);
    ``method="reference"`` is the O(R^2) scan.
    """
    if method == "reference":
        return hl_maximal_reference(a, length)
    if method != "fast":
        raise ValueError(f"unknown method {method!r}")
    P, R = _prefix(a, length)
    out = np.zeros(R)
    _solve(P, 0, R, out)
    return _with_singletons(out, a)


def _support_end(a) -> int:
    nz = np.flatnonzero(np.asarray(a, dtype=float))
    if len(nz) == 0:
        raise ValueError("the zero sequence has no strong-type ratio")
    return int(nz[-1]) + 1


def tail_power_sum(a, q: float, R: int) -> float:
    """``sum_{j > R} M(a)_j ** q`` in closed form, for ``R >= support end``.

    Past the support ``M(a)_j = max_u (S - P[u]) / (j - u)``.  The maximizing
    ``u`` is a lower-hull vertex of the prefix polygon that moves left as ``j``
    grows, so the tail splits into finitely many Hurwitz zeta pieces.
    """
    L = _support_end(a)
    if R < L:
        raise ValueError("R must reach the end of the support")
    P, _ = _prefix(a, L)
    S = float(P[L])
    hull = _lower_hull([(float(u), float(P[u])) for u in range(L)])
    coef = [S - y for _, y in hull]
    us = [int(x) for x, _ in hull]

    def f(k, j):
        return coef[k] / (j - us[k])

    j = R + 1
    k = max(range(len(hull)), key=lambda k: (f(k, j), -k))
    total = 0.0
    while True:
        if k == 0:
            total += coef[0] ** q * zeta(q, j - us[0])
            return total
        # first integer at which vertex k-1 catches up with vertex k
        c0, c1, u0, u1 = coef[k - 1], coef[k], us[k - 1], us[k]
        if c0 <= c1:
            # flat stretch of the prefix polygon: vertex k stays optimal forever
            total += coef[k] ** q * zeta(q, j - us[k])
            return total
        cross = (c0 * u1 - c1 * u0) / (c0 - c1)
        nxt = max(j, math.ceil(cross))
        if nxt > j:
            total += coef[k] ** q * (zeta(q, j - us[k]) - zeta(q, nxt - us[k]))
        j = nxt
        k -= 1


def strong_type_ratio(a, q: float, range_mult: int = 4, length: int | None = None,
                      full_line: bool = False) -> float:
    """``||M(a)||_q / ||a||_q``.

    The maximal function is summed over ``1..R`` with ``R = range_mult *
    (support end)`` unless ``length`` is given.  With ``full_line=True`` the
    closed-form tail beyond ``R`` is added, giving the value over all of N.
    """
    if q <= 1 or math.isinf(q):
        raise ValueError("q must be finite and > 1")
    a = np.asarray(a, dtype=float)
    L = _support_end(a)
    R = length if length is not None else range_mult * L
    R = max(R, L)
    Ma = hl_maximal(a[:L], length=R)
    top = float(np.max(np.abs(a)))
    power = float(np.sum((Ma / top) ** q))
    if full_line:
        power += tail_power_sum(a[:L] / top, q, R)
    base = float(np.sum((np.abs(a) / top) ** q))
    return (power / base) ** (1.0 / q)


def range_stability(a, q: float, mults: Sequence[int] = (4, 8)) -> tuple[float, ...]:
    """Full-line ratios computed with explicit ranges of different lengths."""
    return tuple(strong_type_ratio(a, q, range_mult=m, full_line=True) for m in mults)


def uncentered_norm_bound(q: float) -> float:
    """Norm of the uncentered maximal operator on L_q(R).

    The positive root of ``(q-1) x^q - q x^(q-1) - 1``.  Sampling a step
    function with jumps at the integers shows the discrete operator on l_q
    has norm at most this value.
    """
    if q <= 1 or math.isinf(q):
        raise ValueError("q must be finite and > 1")
    return brentq(lambda x: (q - 1) * x ** q - q * x ** (q - 1) - 1, 1.0, 1e6)


@dataclass(frozen=True)
class DominationResult:
    ok: bool
    min_slack: float
    max_slack: float


def averaging_domination_check(a, windows, tol: float = 1e-12) -> DominationResult:
    """Each window average of |a| is at most ``M(a)_s`` at every ``s`` in the window.

    ``windows`` is a width ``w`` or a sequence of widths; width ``w`` tiles
    ``1..R`` by ``[(j-1)w + 1, jw]`` where ``R`` is ``len(a)`` rounded up to a
    multiple of every width.
    """
    widths = [int(windows)] if np.isscalar(windows) else [int(w) for w in windows]
    if min(widths) < 1:
        raise ValueError("window widths must be positive")
    a = np.abs(np.asarray(a, dtype=float))
    lcm = math.lcm(*widths)
    R = -(-len(a) // lcm) * lcm
    padded = np.zeros(R)
    padded[:len(a)] = a
    Ma = hl_maximal(padded)
    scale = max(float(np.max(Ma)), 1e-300)
    lo, hi = math.inf, -math.inf
    for w in widths:
        avg = np.repeat(padded.reshape(-1, w).mean(axis=1), w)
        slack = Ma - avg
        lo, hi = min(lo, float(slack.min())), max(hi, float(slack.max()))
    return DominationResult(lo >= -tol * scale, lo, hi)


def write_maximal_csv(a, path, length: int | None = None) -> None:
    """CSV with columns ``j, a_j, M(a)_j``."""
    Ma = hl_maximal(a, length=length)
    a = np.asarray(a, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "a_j", "M(a)_j"])
        for j, m in enumerate(Ma, start=1):
            writer.writerow([j, repr(float(a[j - 1])) if j <= len(a) else "0.0", repr(float(m))])
