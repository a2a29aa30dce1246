"""
Minimize ``a -> ||r - B a||`` for a mixed norm.

Coordinate descent with Armijo backtracking gives a cheap warm start.  It can
stall on the kinks of polyhedral norms (p or q in {1, inf}), so it is followed
by a central-cut ellipsoid method, which also yields a certified lower bound
``f(c) - sqrt(g' P g)`` on the optimum at every iterate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ResidualMin:
    value: float
    coeffs: np.ndarray
    lower_bound: float
    iterations: int
    converged: bool


def coordinate_descent(f: Callable, grad: Callable, a0: np.ndarray, max_sweeps: int = 200,
                       stop: float = 1e-12) -> tuple[np.ndarray, float]:
    a = np.array(a0, dtype=float)
    fa = f(a)
    steps = np.maximum(np.abs(a), 1.0) * 0.5
    for _ in range(max_sweeps):
        start = fa
        for k in range(len(a)):
            g = grad(a)[k]
            if g == 0.0:
                continue
            d = -math.copysign(1.0, g)
            t = steps[k]
            while t > 1e-15 * (1.0 + abs(a[k])):
                trial = a.copy()
                trial[k] += t * d
                ft = f(trial)
                if ft <= fa - 1e-4 * t * abs(g):
                    a, fa = trial, ft
                    steps[k] = 2.0 * t
                    break
                t *= 0.5
            else:
                steps[k] = max(t, 1e-12)
        if start - fa < stop:
            break
    return a, fa


def minimize_residual(B: np.ndarray, r: np.ndarray, norm: Callable, norming: Callable,
                      a0: np.ndarray | None = None, tol: float = 1e-9,
                      max_iter: int = 200_000) -> ResidualMin:
    """Certified minimization of ``||r - B a||``.

    ``norm(v)`` evaluates the mixed norm of a dense vector and ``norming(v)``
    returns a norming functional of ``v`` (unit dual norm, pairing equal to
    ``norm(v)``), so ``-B' norming(r - B a)`` is a subgradient.  Stops when the
    gap between the best value and the certified lower bound is at most
    ``tol * ||r||``.
    """
    B = np.asarray(B, dtype=float)
    r = np.asarray(r, dtype=float)
    n = B.shape[1]
    scale = norm(r)
    if n == 0 or scale == 0.0:
        return ResidualMin(scale, np.zeros(n), scale, 0, True)

    def f(a):
        return norm(r - B @ a)

    def grad(a):
        return -(B.T @ norming(r - B @ a))

    a0 = np.zeros(n) if a0 is None else np.asarray(a0, dtype=float)
    a, fa = coordinate_descent(f, grad, a0)
    best_a, best = a, fa
    goal = tol * scale

    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= 1e-14 * sv[0]:
        raise np.linalg.LinAlgError("columns are linearly dependent")
    # ||B a*||_2 <= sqrt(D) ||B a*|| <= 2 sqrt(D) ||r||
    radius = 1.01 * (2.0 * math.sqrt(B.shape[0]) * scale / sv[-1] + np.linalg.norm(a))
    lower = 0.0

    if n == 1:
        lo, hi = a[0] - radius, a[0] + radius
        for it in range(max_iter):
            c = 0.5 * (lo + hi)
            x = np.array([c])
            fc = f(x)
            g = grad(x)[0]
            if fc < best:
                best, best_a = fc, x
            lower = max(lower, fc - abs(g) * 0.5 * (hi - lo))
            if g == 0.0:
                lower = fc
            if best - lower <= goal:
                return ResidualMin(best, best_a, lower, it + 1, True)
            if g > 0:
                hi = c
            else:
                lo = c
        return ResidualMin(best, best_a, lower, max_iter, False)

    c = a.copy()
    P = np.eye(n) * radius ** 2
    for it in range(max_iter):
        fc = f(c)
        g = grad(c)
        if fc < best:
            best, best_a = fc, c.copy()
        gPg = float(g @ P @ g)
        if gPg <= 0.0:
            lower = max(lower, fc)
            return ResidualMin(best, best_a, lower, it + 1, True)
        root = math.sqrt(gPg)
        lower = max(lower, fc - root)
        if best - lower <= goal:
            return ResidualMin(best, best_a, lower, it + 1, True)
        Pg = (P @ g) / root
        c = c - Pg / (n + 1)
        P = (n * n / (n * n - 1.0)) * (P - (2.0 / (n + 1)) * np.outer(Pg, Pg))
        P = 0.5 * (P + P.T)
    return ResidualMin(best, best_a, lower, max_iter, False)
