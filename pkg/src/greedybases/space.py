"""
Finitely supported vectors in mixed-norm sequence spaces.

A space is described by an inner exponent p, an outer exponent q and a rule
giving the dimension of each outer block.  ``Uniform(N)`` models
l_q(l_p^N) and ``Growing()`` models the sum of l_p^n over n in the l_q sense.
Coordinates are addressed by ``MixedIndex(i, n)``: inner coordinate ``i`` of
outer block ``n``, both starting at 1.

Infinite exponents are a flag on :class:`Exponent`, never a large float, so
max/sup semantics are exact.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, InvalidIndexError, UnsupportedSpaceError

# Comparison tolerance used by callers that compare norms computed along
# different summation orders.
NORM_TOL = 1e-12


class Exponent:
    """A Lebesgue exponent in [1, inf].

    Finite values are stored as exact fractions so that duality is an exact
    involution: ``e.dual().dual() == e``.
    """

    __slots__ = ("_frac",)

    def __init__(self, value):
        if isinstance(value, Exponent):
            self._frac = value._frac
            return
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "infinity", "oo", "∞"):
                self._frac = None
                return
            value = Fraction(text)
        if isinstance(value, float) and math.isinf(value):
            if value < 0:
                raise ValueError("exponent must be >= 1")
            self._frac = None
            return
        frac = Fraction(value)
        if frac < 1:
            raise ValueError(f"exponent must be >= 1, got {value!r}")
        self._frac = frac

    @classmethod
    def inf(cls) -> "Exponent":
        return cls("inf")

    @property
    def is_inf(self) -> bool:
        return self._frac is None

    @property
    def fraction(self) -> Fraction:
        if self._frac is None:
            raise ValueError("infinite exponent has no fraction")
        return self._frac

    @property
    def value(self) -> float:
        return math.inf if self._frac is None else float(self._frac)

    def dual(self) -> "Exponent":
        if self._frac is None:
            return Exponent(1)
        if self._frac == 1:
            return Exponent.inf()
        return Exponent(self._frac / (self._frac - 1))

    def __float__(self):
        return self.value

    def __eq__(self, other):
        if not isinstance(other, Exponent):
            try:
                other = Exponent(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self._frac == other._frac

    def __hash__(self):
        return hash(("Exponent", self._frac))

    def __repr__(self):
        return "Exponent(inf)" if self.is_inf else f"Exponent({self._frac})"

    def to_json(self):
        if self.is_inf:
            return "inf"
        if self._frac.denominator == 1:
            return int(self._frac)
        return float(self._frac)


def as_exponent(value) -> Exponent:
    return value if isinstance(value, Exponent) else Exponent(value)


def dual_exponent(e) -> Exponent:
    """1 -> inf, inf -> 1, otherwise e/(e-1)."""
    return as_exponent(e).dual()


# -- block rules -------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    """Every outer block has dimension ``N``."""
    N: int

    def __post_init__(self):
        if int(self.N) < 1:
            raise ValueError("block dimension must be >= 1")

    def dim(self, n: int) -> int:
        return self.N

    @property
    def num_blocks(self):
        return None

    def to_json(self):
        return {"rule": "uniform", "N": self.N}


@dataclass(frozen=True)
class Growing:
    """Block ``n`` has dimension ``n``."""

    def dim(self, n: int) -> int:
        return n

    @property
    def num_blocks(self):
        return None

    def to_json(self):
        return {"rule": "growing"}


@dataclass(frozen=True)
class Explicit:
    """Finitely many blocks with listed dimensions."""
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or min(dims) < 1:
            raise ValueError("every block dimension must be >= 1")
        object.__setattr__(self, "dims", dims)

    def dim(self, n: int) -> int:
        if n > len(self.dims):
            return 0
        return self.dims[n - 1]

    @property
    def num_blocks(self):
        return len(self.dims)

    def to_json(self):
        return {"rule": "explicit", "dims": list(self.dims)}


def _rule_from_json(obj):
    rule = obj["rule"]
    if rule == "uniform":
        return Uniform(int(obj["N"]))
    if rule == "growing":
        return Growing()
    if rule == "explicit":
        return Explicit(tuple(obj["dims"]))
    raise ValueError(f"unknown block rule {rule!r}")


class MixedIndex(NamedTuple):
    i: int  # inner coordinate
    n: int  # outer block


@dataclass(frozen=True)
class SpaceSpec:
    inner_p: Exponent
    outer_q: Exponent
    blocks: object = Growing()

    def __post_init__(self):
        object.__setattr__(self, "inner_p", as_exponent(self.inner_p))
        object.__setattr__(self, "outer_q", as_exponent(self.outer_q))

    @property
    def p(self) -> Exponent:
        return self.inner_p

    @property
    def q(self) -> Exponent:
        return self.outer_q

    def block_dim(self, n: int) -> int:
        return self.blocks.dim(n)

    def check_index(self, index) -> None:
        i, n = index
        if not (isinstance(i, (int, np.integer)) and isinstance(n, (int, np.integer))):
            raise InvalidIndexError(index, "indices must be integers")
        if n < 1 or i < 1:
            raise InvalidIndexError(index, "indices start at 1")
        d = self.block_dim(n)
        if d == 0:
            raise InvalidIndexError(index, f"block {n} does not exist")
        if i > d:
            raise InvalidIndexError(index, f"block {n} has dimension {d}")

    def dual(self) -> "SpaceSpec":
        return SpaceSpec(self.inner_p.dual(), self.outer_q.dual(), self.blocks)

    def to_json(self):
        return {"p": self.inner_p.to_json(), "q": self.outer_q.to_json(),
                "blocks": self.blocks.to_json()}

    @classmethod
    def from_json(cls, obj) -> "SpaceSpec":
        return cls(Exponent(obj["p"]), Exponent(obj["q"]), _rule_from_json(obj["blocks"]))


# -- sparse vectors ----------------------------------------------------------

class SparseVector:
    """Finitely supported coefficient map ``MixedIndex -> float``.

    Zero coefficients are never stored.  Instances are immutable.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping | Iterable = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        data = {}
        for key, value in items:
            value = float(value)
            if value != 0.0:
                data[MixedIndex(int(key[0]), int(key[1]))] = value
        self._entries = MappingProxyType(data)

    @classmethod
    def unit(cls, i: int, n: int, value: float = 1.0) -> "SparseVector":
        return cls({(i, n): value})

    @classmethod
    def zero(cls) -> "SparseVector":
        return cls()

    @property
    def entries(self) -> Mapping:
        return self._entries

    @property
    def support(self) -> frozenset:
        return frozenset(self._entries)

    def items(self):
        return self._entries.items()

    def __getitem__(self, index) -> float:
        return self._entries.get(MixedIndex(*index), 0.0)

    def __len__(self):
        return len(self._entries)

    def __iter__(self) -> Iterator[MixedIndex]:
        return iter(self._entries)

    def __bool__(self):
        return bool(self._entries)

    def __add__(self, other: "SparseVector") -> "SparseVector":
        if not isinstance(other, SparseVector):
            return NotImplemented
        out = dict(self._entries)
        for k, v in other._entries.items():
            out[k] = out.get(k, 0.0) + v
        return SparseVector(out)

    def __neg__(self):
        return SparseVector({k: -v for k, v in self._entries.items()})

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar) -> "SparseVector":
        scalar = float(scalar)
        return SparseVector({k: scalar * v for k, v in self._entries.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "SparseVector":
        return self * (1.0 / float(scalar))

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return dict(self._entries) == dict(other._entries)

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def __repr__(self):
        body = ", ".join(f"({k.i},{k.n}): {v:g}" for k, v in self.sorted_items()[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"SparseVector({{{body}{more}}})"

    def sorted_items(self):
        return sorted(self._entries.items(), key=lambda kv: (kv[0].n, kv[0].i))

    def allclose(self, other: "SparseVector", tol: float = NORM_TOL) -> bool:
        keys = set(self._entries) | set(other._entries)
        return all(abs(self[k] - other[k]) <= tol for k in keys)

    def to_json(self, spec: SpaceSpec) -> str:
        payload = {"spec": spec.to_json(),
                   "entries": [[k.i, k.n, v] for k, v in self.sorted_items()]}
        return json.dumps(payload)

    @staticmethod
    def from_json(text: str) -> tuple["SparseVector", SpaceSpec]:
        obj = json.loads(text)
        spec = SpaceSpec.from_json(obj["spec"])
        vec = SparseVector({(int(i), int(n)): c for i, n, c in obj["entries"]})
        for k in vec:
            spec.check_index(k)
        return vec, spec


def _lp(values: Sequence[float], e: Exponent) -> float:
    """l_e norm of a list of nonnegative floats, scaled against overflow."""
    if not values:
        return 0.0
    top = max(values)
    if top == 0.0:
        return 0.0
    if e.is_inf:
        return top
    r = e.value
    if r == 1.0:
        return math.fsum(values)
    return top * math.fsum((v / top) ** r for v in values) ** (1.0 / r)


def norm(v: SparseVector, spec: SpaceSpec) -> float:
    """Mixed norm: l_q aggregate over outer blocks of inner l_p block norms."""
    blocks: dict[int, list[float]] = {}
    for index, c in v.items():
        spec.check_index(index)
        blocks.setdefault(index.n, []).append(abs(c))
    inner = [_lp(vals, spec.inner_p) for vals in blocks.values()]
    return _lp(inner, spec.outer_q)


def pairing(w: SparseVector, v: SparseVector) -> float:
    small, big = (w, v) if len(w) <= len(v) else (v, w)
    return math.fsum(c * big[k] for k, c in small.items())


def project(v: SparseVector, S: Iterable) -> SparseVector:
    keep = {MixedIndex(*k) for k in S}
    return SparseVector({k: c for k, c in v.items() if k in keep})


def _dual_weights(values: list[float], e: Exponent, total: float) -> list[float]:
    # Norming weights in l_{e'} for a nonnegative vector of l_e norm `total`.
    if total == 0.0:
        return [0.0] * len(values)
    if e.is_inf:
        top = values.index(max(values))
        return [1.0 if k == top else 0.0 for k in range(len(values))]
    r = e.value
    if r == 1.0:
        return [1.0] * len(values)
    return [(v / total) ** (r - 1.0) for v in values]


def norming_functional(v: SparseVector, spec: SpaceSpec) -> SparseVector:
    """A vector ``w`` with ``norm(w, spec.dual()) == 1`` and ``<w, v> == norm(v)``.

    For ``v == 0`` the zero vector is returned.
    """
    blocks: dict[int, list[tuple[MixedIndex, float]]] = {}
    for index, c in v.items():
        blocks.setdefault(index.n, []).append((index, c))
    keys = sorted(blocks)
    inner = [_lp([abs(c) for _, c in blocks[n]], spec.inner_p) for n in keys]
    total = _lp(inner, spec.outer_q)
    outer_w = _dual_weights(inner, spec.outer_q, total)
    out = {}
    for n, b, beta in zip(keys, inner, outer_w):
        if beta == 0.0 or b == 0.0:
            continue
        entries = blocks[n]
        inner_w = _dual_weights([abs(c) for _, c in entries], spec.inner_p, b)
        for (index, c), u in zip(entries, inner_w):
            if u:
                out[index] = math.copysign(beta * u, c)
    return SparseVector(out)


# -- dense kernels -----------------------------------------------------------

def _reduce_lp(a: np.ndarray, e: Exponent, axis: int) -> np.ndarray:
    """l_e norm of nonnegative ``a`` along ``axis``."""
    if e.is_inf:
        return a.max(axis=axis)
    r = e.value
    if r == 1.0:
        return a.sum(axis=axis)
    top = a.max(axis=axis, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    s = ((a / safe) ** r).sum(axis=axis)
    return np.squeeze(safe, axis=axis) * s ** (1.0 / r)


def dense_norm(arr, p, q) -> np.ndarray:
    """Mixed norm of rectangles ``arr[..., i, n]`` (inner coordinate, outer block).

    Leading axes are batch axes.
    """
    a = np.abs(np.asarray(arr, dtype=float))
    inner = _reduce_lp(a, as_exponent(p), axis=-2)
    return _reduce_lp(inner, as_exponent(q), axis=-1)


class BlockLayout:
    """Dense coordinate layout for a finite set of mixed indices.

    ``norms(values)`` evaluates the mixed norm of many vectors at once, where
    ``values[..., k]`` is the coefficient at ``self.indices[k]``.
    """

    def __init__(self, indices: Iterable, spec: SpaceSpec):
        idx = sorted({MixedIndex(*k) for k in indices}, key=lambda k: (k.n, k.i))
        for k in idx:
            spec.check_index(k)
        self.spec = spec
        self.indices = idx
        self.position = {k: pos for pos, k in enumerate(idx)}
        blocks = np.array([k.n for k in idx], dtype=int)
        if len(idx):
            starts = np.flatnonzero(np.r_[True, blocks[1:] != blocks[:-1]])
        else:
            starts = np.zeros(0, dtype=int)
        self._starts = starts

    def __len__(self):
        return len(self.indices)

    def to_dense(self, v: SparseVector) -> np.ndarray:
        out = np.zeros(len(self.indices))
        for k, c in v.items():
            out[self.position[k]] = c
        return out

    def to_sparse(self, values) -> SparseVector:
        return SparseVector(zip(self.indices, np.asarray(values, dtype=float)))

    def norms(self, values) -> np.ndarray:
        a = np.abs(np.asarray(values, dtype=float))
        if a.shape[-1] == 0:
            return np.zeros(a.shape[:-1])
        p, q = self.spec.inner_p, self.spec.outer_q
        top = a.max(axis=-1, keepdims=True)
        safe = np.where(top > 0, top, 1.0)
        a = a / safe
        if p.is_inf:
            inner = np.maximum.reduceat(a, self._starts, axis=-1)
        elif p.value == 1.0:
            inner = np.add.reduceat(a, self._starts, axis=-1)
        else:
            inner = np.add.reduceat(a ** p.value, self._starts, axis=-1) ** (1.0 / p.value)
        if q.is_inf:
            outer = inner.max(axis=-1)
        elif q.value == 1.0:
            outer = inner.sum(axis=-1)
        else:
            outer = (inner ** q.value).sum(axis=-1) ** (1.0 / q.value)
        return np.squeeze(safe, axis=-1) * outer

    def norming(self, values) -> np.ndarray:
        """Dense counterpart of :func:`norming_functional` for one vector."""
        v = np.asarray(values, dtype=float)
        return self.to_dense(norming_functional(self.to_sparse(v), self.spec))


# -- extreme points of the unit ball of l_q(l_inf^N) -------------------------

@dataclass(frozen=True)
class ExtremePoint:
    """Signs on every coordinate of a box plus a unit l_q outer profile.

    ``signs[n-1][i-1]`` is the sign at ``MixedIndex(i, n)``; ``profile[n-1]``
    is the common magnitude on block ``n``.
    """
    signs: tuple
    profile: tuple

    def vector(self) -> SparseVector:
        out = {}
        for n, (row, a) in enumerate(zip(self.signs, self.profile), start=1):
            for i, s in enumerate(row, start=1):
                out[(i, n)] = s * a
        return SparseVector(out)


def _check_ext_space(spec: SpaceSpec):
    if not spec.inner_p.is_inf:
        raise UnsupportedSpaceError(
            f"extreme points are only described for inner p = inf, got {spec.inner_p}")
    if spec.outer_q.is_inf:
        raise UnsupportedSpaceError("extreme-point description needs a finite outer q")


def _box_dims(spec: SpaceSpec, box) -> list[int]:
    inner, nblocks = box
    dims = []
    for n in range(1, nblocks + 1):
        d = spec.block_dim(n)
        if d == 0:
            raise InvalidIndexError((1, n), f"block {n} does not exist")
        dims.append(min(inner, d))
    return dims


def is_extreme_point(v: SparseVector, spec: SpaceSpec, tol: float = 1e-12) -> bool:
    """True when ``v`` has the extreme-point shape for the given finite box.

    Every block of the box is either zero or carries one common magnitude on
    all of its coordinates, and the magnitudes form a unit l_q vector.
    """
    _check_ext_space(spec)
    blocks: dict[int, list[float]] = {}
    for k, c in v.items():
        spec.check_index(k)
        blocks.setdefault(k.n, []).append(abs(c))
    profile = []
    for n, vals in blocks.items():
        if len(vals) != spec.block_dim(n):
            return False
        if max(vals) - min(vals) > tol * max(vals):
            return False
        profile.append(max(vals))
    return abs(_lp(profile, spec.outer_q) - 1.0) <= tol


def _sampled_extreme(spec: SpaceSpec, dims: list[int], samples: int, rng):
    # (flat signs, unit profile) pairs; about half the profiles have zero blocks
    q = spec.outer_q.value
    rng = np.random.default_rng(rng)
    for _ in range(samples):
        a = np.abs(rng.standard_normal(len(dims)))
        if len(dims) > 1 and rng.random() < 0.5:
            a[rng.random(len(dims)) < 0.5] = 0.0
        if not a.any():
            a[rng.integers(len(dims))] = 1.0
        a = a / np.sum(a ** q) ** (1.0 / q)
        yield rng.choice((-1, 1), size=sum(dims)), a


def extreme_point_arrays(spec: SpaceSpec, box, samples: int, rng=None) -> Iterator[np.ndarray]:
    """Random extreme points as dense ``(inner_dim, n_blocks)`` arrays.

    Same distribution as ``extreme_points(..., samples=...)`` but without
    building Python tuples; coordinates beyond a short block stay zero.
    """
    _check_ext_space(spec)
    dims = _box_dims(spec, box)
    inner = box[0]
    mask = np.arange(inner)[:, None] < np.asarray(dims)[None, :]
    for signs, a in _sampled_extreme(spec, dims, samples, rng):
        out = np.zeros((inner, len(dims)))
        out.T[mask.T] = signs
        yield out * a


def extreme_points(spec: SpaceSpec, box, profiles=None, samples: int | None = None,
                   rng=None, max_patterns: int = 1 << 20) -> Iterator[ExtremePoint]:
    """Enumerate (or sample) extreme points of the unit ball of l_q(l_inf) on a box.

    ``box = (inner_dim, n_blocks)``.  With ``samples`` set, random sign patterns
    and random unit profiles are drawn from ``rng`` and nothing is enumerated.
    Otherwise every sign pattern is combined with every profile in
    ``profiles``; a single-block box has the forced profile ``(1,)``.
    """
    _check_ext_space(spec)
    dims = _box_dims(spec, box)
    if samples is not None:
        for signs, a in _sampled_extreme(spec, dims, samples, rng):
            pos = np.cumsum([0] + dims)
            yield ExtremePoint(tuple(tuple(int(x) for x in signs[pos[k]:pos[k + 1]])
                                     for k in range(len(dims))),
                               tuple(float(x) for x in a))
        return
    if profiles is None:
        if len(dims) != 1:
            raise ValueError("profiles are required for a multi-block box")
        profiles = [(1.0,)]
    checked = []
    for prof in profiles:
        prof = tuple(float(x) for x in prof)
        if len(prof) != len(dims) or min(prof) < 0:
            raise ValueError(f"profile {prof} does not fit a {len(dims)}-block box")
        if abs(_lp(list(prof), spec.outer_q) - 1.0) > 1e-12:
            raise ValueError(f"profile {prof} is not a unit l_q vector")
        checked.append(prof)
    total = sum(dims)
    if 2 ** total > max_patterns:
        raise CapacityError(f"{2 ** total} sign patterns on the box",
                            "pass samples=... to use sampling mode")
    for prof in checked:
        for flat in itertools.product((1, -1), repeat=total):
            signs, pos = [], 0
            for d in dims:
                signs.append(tuple(flat[pos:pos + d]))
                pos += d
            yield ExtremePoint(tuple(signs), prof)
