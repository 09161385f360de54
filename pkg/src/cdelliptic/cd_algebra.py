"""Cayley-Dickson numbers at any doubling level.

Coordinates are stored in the *subset basis*: e_0 = 1, then the generators
e_1..e_k, then their left-nested products ordered by size and
lexicographically (so at level 3, e_4 = e_1 e_2, e_5 = e_1 e_3,
e_6 = e_2 e_3, e_7 = (e_1 e_2) e_3).  Multiplication itself runs the
doubling recursion (a, b)(c, d) = (ac - d conj(b), conj(a) d + c b) on the
native pair coordinates; the subset basis is a signed permutation of those.

Scalars are anything with ring operators: int, Fraction, MQElement, float,
mpmath.mpf.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Optional, Sequence

import numpy as np


class LevelMismatchError(ValueError):
    pass


class ZeroNormError(ZeroDivisionError):
    pass


def _native_conj(x):
    if len(x) == 1:
        return x
    h = len(x) // 2
    return _native_conj(x[:h]) + tuple(-v for v in x[h:])


def _native_add(x, y):
    return tuple(a + b for a, b in zip(x, y))


def _native_sub(x, y):
    return tuple(a - b for a, b in zip(x, y))


def _native_mul(x, y):
    n = len(x)
    if n == 1:
        return (x[0] * y[0],)
    h = n // 2
    a, b, c, d = x[:h], x[h:], y[:h], y[h:]
    return (_native_sub(_native_mul(a, c), _native_mul(d, _native_conj(b)))
            + _native_add(_native_mul(_native_conj(a), d), _native_mul(c, b)))


def subsets(k: int) -> list[tuple[int, ...]]:
    """Subsets of {1..k} in subset-basis order (by size, then lexicographic)."""
    out = []
    for r in range(k + 1):
        out.extend(itertools.combinations(range(1, k + 1), r))
    return out


@lru_cache(maxsize=None)
def subset_index(k: int) -> dict:
    return {T: i for i, T in enumerate(subsets(k))}


@lru_cache(maxsize=None)
def _basis_map(k: int) -> tuple[tuple[int, int], ...]:
    """(sign, native index) of each subset-basis element."""
    n = 1 << k

    def unit(j):
        return tuple(1 if t == j else 0 for t in range(n))

    out = []
    for T in subsets(k):
        v = unit(0)
        for i in T:
            v = _native_mul(v, unit(1 << (i - 1)))
        (j,) = [t for t in range(n) if v[t] != 0]
        out.append((v[j], j))
    return tuple(out)


def _to_native(coords, k):
    native = [None] * len(coords)
    for c, (s, j) in zip(coords, _basis_map(k)):
        native[j] = c if s > 0 else -c
    return tuple(native)


def _from_native(native, k):
    return tuple(native[j] if s > 0 else -native[j] for s, j in _basis_map(k))


class CDElement:
    """Immutable level-k Cayley-Dickson number with 2**k coordinates."""

    __slots__ = ("coords",)

    def __init__(self, coords: Sequence[Any]):
        coords = tuple(coords)
        n = len(coords)
        if n == 0 or n & (n - 1):
            raise ValueError(f"coordinate count must be a power of two, got {n}")
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("CDElement is immutable")

    @property
    def level(self) -> int:
        return len(self.coords).bit_length() - 1

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def real(self):
        return self.coords[0]

    @classmethod
    def basis(cls, i: int, level: int, one: Any = 1) -> "CDElement":
        n = 1 << level
        if not 0 <= i < n:
            raise IndexError(f"basis index {i} out of range for level {level}")
        zero = one - one
        return cls(one if t == i else zero for t in range(n))

    @classmethod
    def scalar(cls, s: Any, level: int) -> "CDElement":
        zero = s - s
        return cls((s,) + (zero,) * ((1 << level) - 1))

    def map(self, fn: Callable[[Any], Any]) -> "CDElement":
        return CDElement(fn(c) for c in self.coords)

    def _check(self, other):
        if not isinstance(other, CDElement):
            return NotImplemented
        if other.dim != self.dim:
            raise LevelMismatchError(f"levels {self.level} and {other.level} differ")
        return other

    def __add__(self, other):
        if not isinstance(other, CDElement):
            return CDElement((self.coords[0] + other,) + self.coords[1:])
        self._check(other)
        return CDElement(a + b for a, b in zip(self.coords, other.coords))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, CDElement):
            return CDElement((self.coords[0] - other,) + self.coords[1:])
        self._check(other)
        return CDElement(a - b for a, b in zip(self.coords, other.coords))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return CDElement(-a for a in self.coords)

    def __mul__(self, other):
        if isinstance(other, CDElement):
            return cd_mul(self, other)
        return CDElement(a * other for a in self.coords)

    def __rmul__(self, other):
        # scalars are central
        return CDElement(other * a for a in self.coords)

    def __truediv__(self, other):
        if isinstance(other, CDElement):
            return self * inverse(other)
        return CDElement(a / other for a in self.coords)

    def __eq__(self, other):
        if isinstance(other, CDElement):
            return self.coords == other.coords
        return NotImplemented

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"CDElement({list(self.coords)!r})"

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coords):
            if c != 0:
                terms.append(f"({c})" if i == 0 else f"({c})e{i}")
        return " + ".join(terms) or "0"

    def conj(self) -> "CDElement":
        return conj(self)

    def trace(self):
        return trace(self)

    def norm(self):
        return norm(self)

    def embed(self, level: int) -> "CDElement":
        """The same number viewed in the level-`level` algebra (level >= own)."""
        k = self.level
        if level < k:
            raise LevelMismatchError("cannot embed into a smaller algebra")
        zero = self.coords[0] - self.coords[0]
        idx = subset_index(level)
        out = [zero] * (1 << level)
        for T, c in zip(subsets(k), self.coords):
            out[idx[T]] = c
        return CDElement(out)

    def to_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])


def _as_integers(coords):
    """(integer coords, common denominator) if every coordinate is rational."""
    if not all(type(c) in (int, Fraction) for c in coords):
        return None
    d = math.lcm(*(Fraction(c).denominator for c in coords))
    return tuple(int(c * d) for c in coords), d


def cd_mul(a: CDElement, b: CDElement) -> CDElement:
    if a.dim != b.dim:
        raise LevelMismatchError(f"levels {a.level} and {b.level} differ")
    k = a.level
    ia, ib = _as_integers(a.coords), _as_integers(b.coords)
    if ia is not None and ib is not None:
        # exact rationals: multiply numerators as ints, divide once
        (xa, da), (xb, db) = ia, ib
        p = _from_native(_native_mul(_to_native(xa, k), _to_native(xb, k)), k)
        d = da * db
        if d == 1 and all(type(c) is int for c in a.coords + b.coords):
            return CDElement(p)
        return CDElement(Fraction(v, d) for v in p)
    return CDElement(_from_native(_native_mul(_to_native(a.coords, k), _to_native(b.coords, k)), k))


def conj(a: CDElement) -> CDElement:
    # the subset basis is a signed permutation of the native one, so
    # "negate every imaginary coordinate" survives the change of basis
    return CDElement((a.coords[0],) + tuple(-c for c in a.coords[1:]))


def trace(a: CDElement):
    return 2 * a.coords[0]


def norm(a: CDElement):
    s = a.coords[0] * a.coords[0]
    for c in a.coords[1:]:
        s = s + c * c
    return s


def inner(a: CDElement, b: CDElement):
    """Euclidean scalar product of the coordinate vectors."""
    s = a.coords[0] * b.coords[0]
    for x, y in zip(a.coords[1:], b.coords[1:]):
        s = s + x * y
    return s


def inverse(a: CDElement) -> CDElement:
    """conj(a)/N(a).

    a * conj(a) = N(a) at every level, so this is always a two-sided inverse.
    From level 4 on the inverse property (a^-1 (a b) = b) no longer holds.
    """
    n = norm(a)
    if n == 0:
        raise ZeroNormError("element has zero norm")
    return conj(a) / n


@lru_cache(maxsize=None)
def _basis_product_cached(i: int, j: int, k: int) -> tuple[int, int]:
    e_i = CDElement.basis(i, k)
    e_j = CDElement.basis(j, k)
    p = cd_mul(e_i, e_j).coords
    (m,) = [t for t in range(len(p)) if p[t] != 0]
    return p[m], m


def basis_product(i: int, j: int, k: int) -> tuple[int, int]:
    """e_i e_j = sign * e_m, returned as (sign, m)."""
    n = 1 << k
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"basis indices must lie in [0, {n})")
    return _basis_product_cached(i, j, k)


@lru_cache(maxsize=None)
def structure_table(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (sign, index) with e_i e_j = sign[i, j] * e_index[i, j]."""
    n = 1 << k
    sign = np.zeros((n, n), dtype=np.float64)
    index = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            s, m = basis_product(i, j, k)
            sign[i, j] = s
            index[i, j] = m
    sign.setflags(write=False)
    index.setflags(write=False)
    return sign, index


def float_mul(a, b) -> np.ndarray:
    """Product of float coordinate arrays; broadcasts over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[-1]
    sign, index = structure_table(n.bit_length() - 1)
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape)
    for i in range(n):
        for j in range(n):
            out[..., index[i, j]] += sign[i, j] * a[..., i] * b[..., j]
    return out


def float_conj(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a[..., 1:] *= -1
    return a


def quadratic_residual(z: CDElement) -> CDElement:
    """z^2 - S(z) z + N(z); identically zero in every Cayley-Dickson algebra."""
    return cd_mul(z, z) - trace(z) * z + norm(z)


# -- identity search ---------------------------------------------------------

def random_element(level: int, rng: random.Random, bound: int = 8) -> CDElement:
    return CDElement(
        Fraction(rng.randint(-bound, bound), rng.randint(1, bound)) for _ in range(1 << level)
    )


def _size(x: CDElement):
    return max(abs(c) for c in x.coords)


def _commutator(a, b):
    return a * b - b * a


def _associator(a, b, c):
    return (a * b) * c - a * (b * c)


def _alternative(a, b):
    bb = conj(b)
    nb = norm(b)
    res = [
        (a * a) * b - a * (a * b),
        (a * b) * b - a * (b * b),
        (a * bb) * b - nb * a,
        bb * (b * a) - nb * a,
    ]
    return max(res, key=_size)


def _moufang(a, b, c):
    return (a * b) * (c * a) - a * ((b * c) * a)


def _flexible(a, b):
    return (a * b) * a - a * (b * a)


def _power_assoc(a):
    sq = a * a
    return sq * a - a * sq


def _norm_composition(a, b):
    return norm(a * b) - norm(a) * norm(b)


def _quadratic(a):
    return quadratic_residual(a)


# name -> (arity, residual function, predicate "expected to hold at level k")
IDENTITIES: dict[str, tuple[int, Callable, Callable[[int], bool]]] = {
    "commutative": (2, _commutator, lambda k: k <= 1),
    "associative": (3, _associator, lambda k: k <= 2),
    "alternative": (2, _alternative, lambda k: k <= 3),
    "moufang": (3, _moufang, lambda k: k <= 3),
    "flexible": (2, _flexible, lambda k: True),
    "power_associative": (1, _power_assoc, lambda k: True),
    "norm_composition": (2, _norm_composition, lambda k: k <= 3),
    "quadratic": (1, _quadratic, lambda k: True),
}


@dataclass
class IdentityCheck:
    holds: bool
    witness: Optional[tuple[CDElement, ...]] = None
    max_residual: Fraction = Fraction(0)
    expected: bool = True

    @property
    def as_expected(self) -> bool:
        return self.holds == self.expected


@dataclass
class IdentityReport:
    level: int
    trials: int
    seed: int
    checks: dict[str, IdentityCheck] = field(default_factory=dict)

    def __getattr__(self, name):
        checks = self.__dict__.get("checks", {})
        if name in checks:
            return checks[name]
        raise AttributeError(name)

    @property
    def consistent(self) -> bool:
        return all(c.as_expected for c in self.checks.values())


def _residual_size(r) -> Fraction:
    if isinstance(r, CDElement):
        return _size(r)
    return abs(r)


def _basis_pair_sums(k):
    n = 1 << k
    for a, b in itertools.combinations(range(n), 2):
        yield CDElement.basis(a, k) + CDElement.basis(b, k)


def _candidates(name, arity, k, trials, rng):
    n = 1 << k
    basis = [CDElement.basis(i, k) for i in range(n)]
    # small-basis tuples first so witnesses are readable (e.g. (e1, e2))
    if arity <= 2 or k <= 3:
        yield from itertools.product(basis, repeat=arity)
    if name == "norm_composition":
        sums = list(_basis_pair_sums(k))
        yield from itertools.product(sums, repeat=2)
    for _ in range(trials):
        yield tuple(random_element(k, rng) for _ in range(arity))


def identity_suite(k: int, trials: int = 100, seed: int = 0,
                   names: Optional[Sequence[str]] = None) -> IdentityReport:
    """Search for counterexamples to the standard identities at level k.

    Every identity is checked on basis tuples, then (for norm composition)
    on pairs of two-term basis sums, then on `trials` seeded random tuples
    with small exact rational coordinates.  The first failure becomes the
    witness and ends the search for that identity.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    report = IdentityReport(level=k, trials=trials, seed=seed)
    for name in names or IDENTITIES:
        arity, fn, expected = IDENTITIES[name]
        rng = random.Random(f"{seed}:{name}")
        check = IdentityCheck(holds=True, expected=expected(k))
        for args in _candidates(name, arity, k, trials, rng):
            r = _residual_size(fn(*args))
            if r > check.max_residual:
                check.max_residual = r
            if r != 0:
                check.holds = False
                check.witness = args
                break
        report.checks[name] = check
    return report
