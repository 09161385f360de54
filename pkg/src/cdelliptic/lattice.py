"""Lattices with Cayley-Dickson multiplication.

Generators are CDElements whose coordinates are exact scalars (int, Fraction
or MQElement of one multiquadratic field).  W has the generator coordinates
as rows; theta is fixed by  sum_h W[h][i] * theta[h][l] = delta_il * det W,
i.e. theta = det(W) * inverse(W) transposed (the cofactor matrix).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .cd_algebra import CDElement, LevelMismatchError, cd_mul, conj, inner, subset_index, subsets
from .number_field import MQElement, MQField


class SingularLatticeError(ValueError):
    """Generators are linearly dependent."""


class NotAMultiplierError(ValueError):
    def __init__(self, h: int, product: CDElement):
        super().__init__(f"lambda (w_{h} mu) = {product} is not in the lattice")
        self.h = h
        self.product = product


def _is_zero(x) -> bool:
    return not x


def _is_integer(x) -> bool:
    if isinstance(x, MQElement):
        return x.is_integer()
    return Fraction(x).denominator == 1


def _is_rational(x) -> bool:
    if isinstance(x, MQElement):
        return x.is_rational()
    return isinstance(x, (int, Fraction))


def _as_int(x) -> int:
    if isinstance(x, MQElement):
        return int(x.coeffs[0])
    return int(x)


def _field_of(values) -> Optional[MQField]:
    field = None
    for v in values:
        if isinstance(v, MQElement):
            if field is None:
                field = v.field
            elif v.field is not field:
                raise ValueError(f"mixed scalar fields {field} and {v.field}")
    return field


def _normalize(values, field: Optional[MQField]):
    if field is None:
        return [Fraction(v) for v in values]
    return [v if isinstance(v, MQElement) else field.rational(v) for v in values]


def _simplify(x):
    """Rational MQElements and integral Fractions collapse to plain numbers."""
    if isinstance(x, MQElement) and x.is_rational():
        x = x.coeffs[0]
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


def gauss_jordan(M: Sequence[Sequence]) -> tuple:
    """(det, inverse) of a square matrix over an exact field.

    Pivots are the first nonzero entry in each column; field division keeps
    entries reduced, so no fraction-free bookkeeping is needed.
    """
    n = len(M)
    A = [list(row) + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(M)]
    det = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if not _is_zero(A[r][col])), None)
        if piv is None:
            return 0, None
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        p = A[col][col]
        det = det * p
        inv_p = 1 / p
        A[col] = [v * inv_p for v in A[col]]
        for r in range(n):
            if r != col and not _is_zero(A[r][col]):
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return det, [row[n:] for row in A]


@dataclass(frozen=True)
class Lattice:
    level: int
    generators: tuple
    W: tuple
    det: object
    theta: tuple
    W_inv: tuple

    @property
    def dim(self) -> int:
        return 1 << self.level

    @property
    def field(self) -> Optional[MQField]:
        return _field_of(x for row in self.W for x in row)

    def coefficients(self, z: CDElement) -> list:
        """Exact c with z = sum_h c_h w_h."""
        if z.dim != self.dim:
            raise LevelMismatchError(f"element of level {z.level} vs lattice level {self.level}")
        field = self.field
        x = _normalize(z.coords, field) if field is not None else list(z.coords)
        n = self.dim
        return [sum((x[j] * self.W_inv[j][h] for j in range(n)), 0) for h in range(n)]

    def combine(self, c: Sequence[int]) -> CDElement:
        out = None
        for ch, g in zip(c, self.generators):
            if ch:
                t = g * ch
                out = t if out is None else out + t
        if out is None:
            return CDElement.scalar(0, self.level)
        return out.map(_simplify)


def lattice_from_generators(gens: Sequence[CDElement]) -> Lattice:
    gens = tuple(gens)
    if not gens:
        raise ValueError("no generators")
    k = gens[0].level
    n = 1 << k
    if len(gens) != n or any(g.dim != n for g in gens):
        raise LevelMismatchError(f"need {n} generators of level {k}")
    field = _field_of(x for g in gens for x in g.coords)
    W = [_normalize(g.coords, field) for g in gens]
    det, inv = gauss_jordan(W)
    if inv is None or _is_zero(det):
        raise SingularLatticeError("generators are linearly dependent (det W = 0)")
    theta = tuple(tuple(_simplify(det * inv[l][h]) for l in range(n)) for h in range(n))
    return Lattice(
        level=k,
        generators=tuple(g.map(_simplify) for g in gens),
        W=tuple(tuple(_simplify(x) for x in row) for row in W),
        det=_simplify(det),
        theta=theta,
        W_inv=tuple(tuple(inv[i][j] for j in range(n)) for i in range(n)),
    )


def standard_lattice(level: int = 3) -> Lattice:
    return lattice_from_generators([CDElement.basis(i, level) for i in range(1 << level)])


def parse_subset_key(key) -> tuple[int, ...]:
    """'1,2' or (1, 2) or 1 -> (1, 2)."""
    if isinstance(key, int):
        return (key,)
    if isinstance(key, str):
        key = key.strip()
        if not key:
            return ()
        return tuple(sorted(int(p) for p in key.split(",")))
    return tuple(sorted(int(p) for p in key))


def canonical_cm_lattice(m: Sequence[int], alpha: Optional[Mapping] = None) -> Lattice:
    """w_T = alpha_T sqrt(m_T) e_T for every subset T of {1..k}; w_0 = 1.

    `alpha` maps subset keys ("1,2", (1, 2), 1) to nonzero rationals.  A
    missing alpha_i is 1 and a missing alpha_T for |T| >= 2 is the product of
    the alpha_i, i in T, as for the nested products w_1 w_2 ...; integer
    alpha_i then give a lattice closed under multiplication.
    """
    field = MQField(m)
    k = field.k
    alpha = {parse_subset_key(key): Fraction(v) for key, v in (alpha or {}).items()}
    valid = set(subsets(k))
    for T, a in alpha.items():
        if T not in valid:
            raise ValueError(f"alpha key {T} is not a subset of 1..{k}")
        if a == 0:
            raise ValueError(f"alpha for {T} must be nonzero")
    idx = subset_index(k)
    gens = []
    for T in subsets(k):
        mask = sum(1 << (i - 1) for i in T)
        default = Fraction(1)
        for i in T:
            default *= alpha.get((i,), Fraction(1))
        coef = field.sqrt(mask, alpha.get(T, default)) if T else field.rational(alpha.get((), 1))
        coords = [field.zero()] * (1 << k)
        coords[idx[T]] = coef
        gens.append(CDElement(coords))
    return lattice_from_generators(gens)


def contains(L: Lattice, z: CDElement) -> Optional[tuple[int, ...]]:
    c = L.coefficients(z)
    if all(_is_integer(x) for x in c):
        return tuple(_as_int(x) for x in c)
    return None


def brandt_check(a: CDElement, b: CDElement, mode: str = "rational") -> bool:
    """True iff 2<a, b> and 2<a, conj(b)> lie in Q (mode 'rational') or Z ('integral')."""
    if mode not in ("rational", "integral"):
        raise ValueError("mode must be 'rational' or 'integral'")
    test = _is_rational if mode == "rational" else (lambda x: _is_rational(x) and _is_integer(x))
    return test(_simplify(2 * inner(a, b))) and test(_simplify(2 * inner(a, conj(b))))


@dataclass(frozen=True)
class CMMultiplier:
    lam: CDElement
    mu: CDElement
    n: tuple

    def reconstruct(self, L: Lattice, h: int) -> CDElement:
        return L.combine(self.n[h])


def _lift_to(z: CDElement, field: Optional[MQField]) -> CDElement:
    if field is None:
        return z
    return CDElement(_normalize(z.coords, field))


def cm_multiplier_matrix(L: Lattice, lam: CDElement, mu: Optional[CDElement] = None) -> CMMultiplier:
    """Integer matrix n with lam (w_h mu) = sum_j n[h][j] w_j; mu defaults to 1."""
    if mu is None:
        mu = CDElement.scalar(1, L.level)
    if lam.dim != L.dim or mu.dim != L.dim:
        raise LevelMismatchError("lambda, mu and the lattice must share a level")
    if not any(lam.coords) or not any(mu.coords):
        raise ValueError("lambda and mu must be nonzero")
    field = L.field
    lam_f, mu_f = _lift_to(lam, field), _lift_to(mu, field)
    rows = []
    for h, w in enumerate(L.generators):
        prod = cd_mul(lam_f, cd_mul(_lift_to(w, field), mu_f))
        c = contains(L, prod)
        if c is None:
            raise NotAMultiplierError(h, prod.map(_simplify))
        rows.append(c)
    return CMMultiplier(lam.map(_simplify), mu.map(_simplify), tuple(rows))


def is_closed_under_multiplication(L: Lattice) -> bool:
    field = L.field
    gens = [_lift_to(g, field) for g in L.generators]
    return all(contains(L, cd_mul(a, b)) is not None for a in gens for b in gens)


def adjugate_residual(L: Lattice) -> list:
    """Entries of sum_h W[h][i] theta[h][l] - delta_il det W; all zero for a valid lattice."""
    n = L.dim
    out = []
    for i in range(n):
        for l in range(n):
            s = sum((L.W[h][i] * L.theta[h][l] for h in range(n)), 0)
            out.append(_simplify(s - (L.det if i == l else 0)))
    return out
