"""Cauchy kernel q_0(z) = conj(z)/|z|^(2^k), its partial derivatives, Fueter
polynomials and a finite-difference Cauchy-Riemann residual.

Every derivative of q_0 keeps the closed form P(x) * N(z)^(-m) with P a
polynomial in the coordinates whose coefficients are Cayley-Dickson numbers
(stored as integer coordinate tuples).  Differentiation acts on that form
exactly, so q_n evaluates to machine precision without nested differences.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .cd_algebra import CDElement, cd_mul, conj, norm

# surface measure of the unit sphere in R^8
OMEGA_8 = math.pi**4 / 3


class SingularPointError(ZeroDivisionError):
    """Evaluation at (or too close to) a singularity."""


Monomial = tuple[int, ...]


@dataclass(frozen=True)
class KernelRep:
    """f(z) = P(x) * N(z)^(-power); `poly` maps exponent tuples to coefficient tuples."""

    level: int
    power: int
    poly: Mapping[Monomial, tuple[int, ...]]

    @property
    def dim(self) -> int:
        return 1 << self.level

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.poly), default=0)

    def __hash__(self):
        return hash((self.level, self.power, tuple(sorted(self.poly.items()))))

    def evaluate(self, z: CDElement) -> CDElement:
        x = z.coords
        N = norm(z)
        if N == 0:
            raise SingularPointError("kernel evaluated at z = 0")
        zero = x[0] - x[0]
        acc = [zero] * self.dim
        for exps, coef in self.poly.items():
            mono = 1
            for xi, e in zip(x, exps):
                if e:
                    mono = mono * xi**e
            for c, v in enumerate(coef):
                if v:
                    acc[c] = acc[c] + v * mono
        d = N**self.power
        return CDElement(a / d for a in acc)

    def evaluate_batch(self, X) -> np.ndarray:
        """Float evaluation at the rows of X, shape (P, 2**k) -> (P, 2**k)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        exps, coefs = self.arrays()
        mono = np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
        N = np.einsum("pi,pi->p", X, X)
        if np.any(N == 0):
            raise SingularPointError("kernel evaluated at z = 0")
        return (mono @ coefs) / N[:, None] ** self.power

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        items = sorted(self.poly.items())
        exps = np.array([e for e, _ in items], dtype=np.int64).reshape(len(items), self.dim)
        coefs = np.array([c for _, c in items], dtype=np.float64).reshape(len(items), self.dim)
        return exps, coefs

    def terms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sparse (variables, component, coefficient) form used by the lattice sums.

        Row t of `variables` lists the coordinate indices of the monomial with
        multiplicity, padded with -1.
        """
        vars_, comps, coefs = [], [], []
        deg = max(self.degree, 1)
        for exps, coef in sorted(self.poly.items()):
            v = [i for i, e in enumerate(exps) for _ in range(e)]
            v += [-1] * (deg - len(v))
            for c, val in enumerate(coef):
                if val:
                    vars_.append(v)
                    comps.append(c)
                    coefs.append(float(val))
        return (np.array(vars_, dtype=np.int64).reshape(len(comps), deg),
                np.array(comps, dtype=np.int64), np.array(coefs, dtype=np.float64))

    def bound(self) -> float:
        """M with |f(z)| <= M |z|^(deg P - 2 power), from |x^e| <= |z|^|e|."""
        return float(sum(math.sqrt(sum(v * v for v in c)) for c in self.poly.values()))


def _unit(n, i):
    return tuple(1 if j == i else 0 for j in range(n))


def _padd(p: dict, exps, coef, scale=1):
    cur = p.get(exps)
    new = tuple(scale * c for c in coef) if cur is None else tuple(a + scale * c for a, c in zip(cur, coef))
    if any(new):
        p[exps] = new
    elif cur is not None:
        del p[exps]


def q0_rep(k: int) -> KernelRep:
    if k < 1:
        raise ValueError("level must be >= 1")
    n = 1 << k
    poly = {}
    for j in range(n):
        coef = tuple((1 if j == 0 else -1) if t == j else 0 for t in range(n))
        poly[_unit(n, j)] = coef
    return KernelRep(level=k, power=1 << (k - 1), poly=poly)


def derive(rep: KernelRep, i: int) -> KernelRep:
    """d/dx_i of P * N^-m = (N * dP/dx_i - 2 m x_i P) * N^-(m+1)."""
    n = rep.dim
    if not 0 <= i < n:
        raise IndexError(f"coordinate {i} out of range")
    m = rep.power
    out: dict = {}
    for exps, coef in rep.poly.items():
        e_i = exps[i]
        if e_i:
            dexps = exps[:i] + (e_i - 1,) + exps[i + 1:]
            for j in range(n):
                ex = tuple(a + (2 if t == j else 0) for t, a in enumerate(dexps))
                _padd(out, ex, coef, e_i)
        ex = tuple(a + (1 if t == i else 0) for t, a in enumerate(exps))
        _padd(out, ex, coef, -2 * m)
    return KernelRep(level=rep.level, power=m + 1, poly=out)


def _check_multi_index(n_idx: Sequence[int], k: int) -> tuple[int, ...]:
    n_idx = tuple(int(v) for v in n_idx)
    if len(n_idx) != (1 << k) - 1 or any(v < 0 for v in n_idx):
        raise ValueError(f"multi-index must have {(1 << k) - 1} non-negative entries")
    return n_idx


@lru_cache(maxsize=None)
def kernel_rep(k: int, n_idx: tuple[int, ...]) -> KernelRep:
    """Cached representation of q_n; n_idx = (n_1, ..., n_{2^k - 1})."""
    n_idx = _check_multi_index(n_idx, k)
    if not any(n_idx):
        return q0_rep(k)
    j = max(t for t, v in enumerate(n_idx) if v)
    prev = list(n_idx)
    prev[j] -= 1
    return derive(kernel_rep(k, tuple(prev)), j + 1)


def tau(i: int, k: int) -> tuple[int, ...]:
    """The multi-index with a single 1 in direction i (1 <= i < 2^k)."""
    n = (1 << k) - 1
    if not 1 <= i <= n:
        raise IndexError(f"direction {i} out of range 1..{n}")
    return tuple(1 if t == i - 1 else 0 for t in range(n))


def qn_eval(n_idx: Sequence[int], z: CDElement) -> CDElement:
    return kernel_rep(z.level, tuple(n_idx)).evaluate(z)


def q0(z: CDElement) -> CDElement:
    N = norm(z)
    if N == 0:
        raise SingularPointError("q0 evaluated at z = 0")
    p = N ** (1 << (z.level - 1))
    if isinstance(p, (int, Fraction)):
        return conj(z) * (1 / Fraction(p))
    return conj(z) / p


# -- Fueter polynomials ------------------------------------------------------

def fueter_Z(i: int, z: CDElement) -> CDElement:
    """Z_i(z) = x_i - x_0 e_i."""
    if not 1 <= i < z.dim:
        raise IndexError(f"index {i} out of range 1..{z.dim - 1}")
    x = z.coords
    zero = x[0] - x[0]
    out = [zero] * z.dim
    out[0] = x[i]
    out[i] = -x[0]
    return CDElement(out)


def _distinct_permutations(items):
    seen = set()
    for p in itertools.permutations(items):
        if p not in seen:
            seen.add(p)
            yield p


def fueter_V(n_idx: Sequence[int], z: CDElement) -> CDElement:
    """Average over distinguishable orderings of right-nested Z-products.

    V_n = (1/|n|!) sum_pi Z_pi1 (Z_pi2 (... Z_pim)), the factors being Z_i
    repeated n_i times.
    """
    n_idx = _check_multi_index(n_idx, z.level)
    factors = [i + 1 for i, v in enumerate(n_idx) for _ in range(v)]
    if not factors:
        return CDElement.scalar(z.coords[0] - z.coords[0] + 1, z.level)
    Z = {i: fueter_Z(i, z) for i in set(factors)}
    total = None
    for perm in _distinct_permutations(factors):
        prod = Z[perm[-1]]
        for i in reversed(perm[:-1]):
            prod = cd_mul(Z[i], prod)
        total = prod if total is None else total + prod
    return total / math.factorial(len(factors))


# -- Cauchy-Riemann operator by central differences --------------------------

def fd_step(z: CDElement) -> float:
    return 1e-5 * max(1.0, math.sqrt(float(norm(z))))


def partials(f: Callable[[CDElement], CDElement], z: CDElement, h: Optional[float] = None) -> list[np.ndarray]:
    """Central-difference partial derivatives of f at z (float coordinates)."""
    h = fd_step(z) if h is None else h
    x = z.to_float()
    out = []
    for j in range(z.dim):
        d = np.zeros(z.dim)
        d[j] = h
        try:
            fp = np.array(f(CDElement(x + d)).to_float())
            fm = np.array(f(CDElement(x - d)).to_float())
        except ZeroDivisionError as exc:
            raise SingularPointError(f"singularity within the difference stencil at {z}") from exc
        out.append((fp - fm) / (2 * h))
    return out


def dirac_residual(f: Callable[[CDElement], CDElement], z: CDElement,
                   h: Optional[float] = None, side: str = "left") -> CDElement:
    """Central-difference approximation of D f (side='left') or f D (side='right'),
    D = d/dx_0 + sum_j e_j d/dx_j."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    d = partials(f, z, h)
    k = z.level
    total = CDElement(d[0])
    for j in range(1, z.dim):
        e_j = CDElement.basis(j, k, 1.0)
        g = CDElement(d[j])
        total = total + (cd_mul(e_j, g) if side == "left" else cd_mul(g, e_j))
    return total


def residual_size(r: CDElement) -> float:
    return float(np.linalg.norm(r.to_float()))
