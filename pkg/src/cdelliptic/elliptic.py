"""Weierstrass-type lattice series in Cayley-Dickson algebras.

    zeta(z)   = q0(z) + sum_{w != 0} [q0(z + w) - q0(w) - sum_j Z_j(z) q_j(w)]
    wp_i(z)   = q_i(z) + sum_{w != 0} [q_i(z + w) - q_i(w)]
    wp_n(z)   = sum_w q_n(z + w),  |n| >= 2

Sums run over w = c . W with the integer vector c in the box |c|_inf <= R.
One traversal at the largest radius yields every smaller radius too, since
the box of radius r is exactly the union of shells 0..r.

The sign of the Fueter correction is chosen so that the first order Taylor
term of q0(z + w) cancels: by left regularity that term equals
sum_j Z_j(z) q_j(w), and this is also what makes d zeta/dx_i = wp_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numba
import numpy as np

from . import _shells
from .cd_algebra import CDElement, float_mul, structure_table
from .kernels import SingularPointError, kernel_rep


class NearSingularityError(SingularPointError):
    """A summand came closer than eps to a pole."""


@dataclass(frozen=True)
class SeriesParams:
    radius: int = 4
    eps: Optional[float] = None
    pairing: bool = True
    precision: int = 53
    threads: Optional[int] = None

    def __post_init__(self):
        if int(self.radius) != self.radius or self.radius < 1:
            raise ValueError(f"radius must be a positive integer, got {self.radius}")
        if self.eps is not None and not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.precision != 53:
            raise ValueError("lattice sums run in binary64; precision must be 53")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")

    def with_radius(self, radius: int) -> "SeriesParams":
        return SeriesParams(radius, self.eps, self.pairing, self.precision, self.threads)


def _embed_scalar(x, precision: int = 53) -> float:
    from .number_field import MQElement, mq_embed

    if isinstance(x, MQElement):
        return float(mq_embed(x, precision))
    return float(x)


@dataclass(frozen=True)
class EvalContext:
    """Float generator matrix (rows = generators) plus derived data."""

    W: np.ndarray
    lattice: object = None
    W_inv: np.ndarray = field(init=False, repr=False)
    shortest: float = field(init=False)

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64)
        n = W.shape[0]
        if W.shape != (n, n) or n < 2 or n & (n - 1):
            raise ValueError(f"generator matrix must be square of size 2**k, got {W.shape}")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        inv = np.linalg.inv(W)
        inv.setflags(write=False)
        object.__setattr__(self, "W_inv", inv)
        object.__setattr__(self, "shortest", float(np.min(np.linalg.norm(W, axis=1))))

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @property
    def level(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def standard(cls, level: int = 3) -> "EvalContext":
        """The lattice spanned by 1, e_1, ..., e_{2^k-1}."""
        return cls(np.eye(1 << level))

    @classmethod
    def from_lattice(cls, lattice, precision: int = 53) -> "EvalContext":
        W = [[_embed_scalar(x, precision) for x in row] for row in lattice.W]
        return cls(np.array(W), lattice)

    def scaled(self, t: float) -> "EvalContext":
        return EvalContext(self.W * t)

    def eps(self, params: SeriesParams) -> float:
        return params.eps if params.eps is not None else 1e-6 * self.shortest

    def coefficients(self, z) -> np.ndarray:
        """W-basis coefficients a with z = a . W."""
        return _as_points(z, self.dim) @ self.W_inv


def _as_points(z, n: int) -> np.ndarray:
    if isinstance(z, CDElement):
        z = [z]
    if isinstance(z, (list, tuple)) and z and isinstance(z[0], CDElement):
        z = [p.to_float() for p in z]
    X = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if X.ndim != 2 or X.shape[1] != n:
        raise ValueError(f"points must have {n} coordinates")
    return np.ascontiguousarray(X)


@dataclass
class SeriesResult:
    """Values for every radius 1..R; values[r] has shape (groups, ...) ."""

    kind: str
    radii: list
    values: dict
    tails: dict
    min_distance: float
    params: SeriesParams

    @property
    def value(self) -> np.ndarray:
        return self.values[self.radii[-1]]

    @property
    def tail(self) -> np.ndarray:
        return self.tails[self.radii[-1]]


def tail_estimate(curr, prev, R: int, p: float) -> np.ndarray:
    """Geometric-tail guess from two consecutive radii for a tail ~ R^-p.

    Norm is taken over the last axis (the algebra coordinates).
    """
    d = np.linalg.norm(np.asarray(curr) - np.asarray(prev), axis=-1)
    if R <= 1:
        return d
    return d / ((R / (R - 1)) ** p - 1)


def _reduce(acc: np.ndarray, cmp: np.ndarray) -> np.ndarray:
    """Chunk/shell reduction in a fixed order; returns cumulative sums per radius."""
    nch, nsh = acc.shape[:2]
    trail = acc.shape[2:]
    a = acc.reshape(nch, nsh, -1)
    c = cmp.reshape(nch, nsh, -1)
    per_shell = np.empty((nsh, a.shape[2]))
    for s in range(nsh):
        for t in range(a.shape[2]):
            per_shell[s, t] = math.fsum(list(a[:, s, t]) + list(-c[:, s, t]))
    cum = np.empty_like(per_shell)
    for t in range(per_shell.shape[1]):
        for s in range(nsh):
            cum[s, t] = math.fsum(per_shell[: s + 1, t])
    return cum.reshape((nsh,) + trail)


def _set_threads(params: SeriesParams):
    if params.threads is not None:
        numba.set_num_threads(min(params.threads, numba.config.NUMBA_NUM_THREADS))


def _groups(P: int, groups) -> tuple[np.ndarray, int]:
    if groups is None:
        g = np.arange(P, dtype=np.int64)
    else:
        g = np.asarray(groups, dtype=np.int64)
        if g.shape != (P,) or (P and g.min() < 0):
            raise ValueError("groups must assign a non-negative index to every point")
    return g, int(g.max()) + 1 if P else 0


def _qtau_np(X: np.ndarray, m: int) -> np.ndarray:
    """q_i(x) for i = 1..n-1 at the rows of X, shape (P, n-1, n)."""
    N = np.einsum("pi,pi->p", X, X)
    a = N ** (-m)
    b = -2.0 * m * a / N
    n = X.shape[1]
    Xc = X.copy()
    Xc[:, 1:] *= -1
    out = (b[:, None] * X[:, 1:])[:, :, None] * Xc[:, None, :]
    for i in range(1, n):
        out[:, i - 1, i] -= a
    return out


def _q0_np(X: np.ndarray, m: int) -> np.ndarray:
    N = np.einsum("pi,pi->p", X, X)
    Xc = X.copy()
    Xc[:, 1:] *= -1
    return Xc * (N ** (-m))[:, None]


def _finish(kind, cum, minN, origin, X, ctx, params, p_tail):
    eps = ctx.eps(params)
    n0 = np.einsum("pi,pi->p", X, X)
    dmin = math.sqrt(min(float(np.min(minN)) if minN.size else math.inf,
                         float(np.min(n0)) if origin is not None and n0.size else math.inf))
    if dmin < eps:
        raise NearSingularityError(
            f"{kind}: a summand lies within {dmin:.3g} of a pole (eps = {eps:.3g})")
    if origin is not None:
        cum = cum + origin[None]
    radii = list(range(1, params.radius + 1))
    values = {r: cum[r] for r in radii}
    tails = {r: tail_estimate(cum[r], cum[r - 1], r, p_tail) for r in radii}
    return SeriesResult(kind, radii, values, tails, dmin, params)


def _reduce_points(acc: np.ndarray, cmp: np.ndarray, g: np.ndarray, ng: int) -> np.ndarray:
    """Per-point shell sums (chunk, shell, E, point) -> cumulative group sums (shell, group, E)."""
    nch, nsh, E, P = acc.shape
    out = np.zeros((nsh, ng, E))
    for grp in range(ng):
        idx = np.flatnonzero(g == grp)
        if idx.size == 0:
            continue
        a = acc[:, :, :, idx].transpose(0, 3, 1, 2).reshape(nch * idx.size, nsh, E)
        c = cmp[:, :, :, idx].transpose(0, 3, 1, 2).reshape(nch * idx.size, nsh, E)
        out[:, grp] = _reduce(a, c)
    return out


def _group_sums(X: np.ndarray, g: np.ndarray, ng: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-group coordinate sums and point counts."""
    Xg = np.zeros((ng, X.shape[1]))
    for grp in range(ng):
        rows = X[g == grp]
        Xg[grp] = [math.fsum(col) for col in rows.T] if len(rows) else 0.0
    return Xg, np.bincount(g, minlength=ng).astype(np.float64)


def _left_units(n: int) -> np.ndarray:
    """L[j-1] is the matrix of y -> e_j y, so that sum_j e_j Q_j = einsum over L."""
    E = np.eye(n)
    return np.array([[float_mul(E[j], E[c]) for c in range(n)] for j in range(1, n)])


# Sums over w alone do not depend on the evaluation points; they are kept per
# (kind, lattice, pairing) at the largest radius computed so far.  Cumulative
# shell sums at a smaller radius are a prefix of those at a larger one.
_SHARED: dict = {}


def _shared_get(kind, ctx, params):
    hit = _SHARED.get((kind, ctx.W.tobytes(), params.pairing))
    if hit is not None and hit.shape[0] > params.radius:
        return hit[: params.radius + 1]
    return None


def _shared_put(kind, ctx, params, S):
    if len(_SHARED) > 32:
        _SHARED.clear()
    _SHARED[(kind, ctx.W.tobytes(), params.pairing)] = S


def zeta_series(z, ctx: EvalContext, params: SeriesParams, groups=None) -> SeriesResult:
    """Truncated zeta at the given points (summed per group), every radius 1..R."""
    X = _as_points(z, ctx.dim)
    g, ng = _groups(len(X), groups)
    n = ctx.dim
    m = n // 2
    _set_threads(params)
    S = _shared_get("zeta", ctx, params)
    acc, cmp, sacc, scmp, minN = _shells.zeta_shells(ctx.W, np.ascontiguousarray(X.T),
                                                     params.radius, params.pairing, m, S is None)
    T = _reduce_points(acc, cmp, g, ng)                     # (nsh, ng, n)
    if S is None:
        S = _reduce(sacc, scmp)                             # (nsh, n, n)
        _shared_put("zeta", ctx, params, S)
    Q = S[:, : n - 1]                                       # sum_w q_j(w), j = 1..n-1
    BQ = np.einsum("jcl,sjc->sl", _left_units(n), Q)        # sum_j e_j Q_j
    Xg, counts = _group_sums(X, g, ng)
    # sum_j Z_j(z) q_j(w) = sum_j x_j q_j(w) - x_0 sum_j e_j q_j(w), summed over the group
    corr = np.einsum("gj,sjl->sgl", Xg[:, 1:], Q) - Xg[None, :, 0:1] * BQ[:, None, :]
    cum = T - (2.0 if params.pairing else 1.0) * corr
    if not params.pairing:
        cum = cum - counts[None, :, None] * S[:, None, n - 1]
    if _has_origin_singularity(X):
        raise NearSingularityError("zeta evaluated at a lattice point")
    origin = np.zeros((ng, n))
    np.add.at(origin, g, _q0_np(X, m))
    return _finish("zeta", cum, minN, origin, X, ctx, params, 2)


def _has_origin_singularity(X):
    return bool(np.any(np.einsum("pi,pi->p", X, X) == 0))


@lru_cache(maxsize=None)
def _pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    I, J = np.triu_indices(n)
    return I.astype(np.int64), J.astype(np.int64)


def _expand_compact(C: np.ndarray, n: int) -> np.ndarray:
    """(..., E) compact sums (b x_I x_J, a) -> (..., n-1, n) values of q_i = b x_i conj(x) - a e_i."""
    I, J = _pair_index(n)
    M = np.zeros(C.shape[:-1] + (n, n))
    M[..., I, J] = C[..., :-1]
    M[..., J, I] = C[..., :-1]
    A = C[..., -1]
    out = -M[..., 1:, :]
    out[..., 0] = M[..., 1:, 0]
    for i in range(1, n):
        out[..., i - 1, i] -= A
    return out


def wp_tau_series(z, ctx: EvalContext, params: SeriesParams, groups=None) -> SeriesResult:
    """Truncated wp_i for all i = 1..2^k-1 at once; values have shape (groups, 2^k-1, 2^k)."""
    X = _as_points(z, ctx.dim)
    g, ng = _groups(len(X), groups)
    n = ctx.dim
    m = n // 2
    I, J = _pair_index(n)
    _set_threads(params)
    S = _shared_get("wp_tau", ctx, params)
    acc, cmp, sacc, scmp, minN = _shells.wp_tau_shells(ctx.W, np.ascontiguousarray(X.T),
                                                       params.radius, params.pairing, m, I, J,
                                                       S is None)
    T = _reduce_points(acc, cmp, g, ng)                     # (nsh, ng, E)
    if S is None:
        S = _reduce(sacc, scmp)                             # (nsh, E)
        _shared_put("wp_tau", ctx, params, S)
    _, counts = _group_sums(X, g, ng)
    weight = counts * (2.0 if params.pairing else 1.0)
    cum = _expand_compact(T - weight[None, :, None] * S[:, None, :], n)
    if _has_origin_singularity(X):
        raise NearSingularityError("wp evaluated at a lattice point")
    origin = np.zeros((ng, n - 1, n))
    np.add.at(origin, g, _qtau_np(X, m))
    return _finish("wp_tau", cum, minN, origin, X, ctx, params, 2)


def _wp_n_tail_power(order: int, pairing: bool) -> int:
    # q_n has parity (-1)^(|n|+1); pairing cancels the leading term when it is odd
    if pairing and order % 2 == 0:
        return order
    return order - 1


def wp_n_series(n_idx: Sequence[int], z, ctx: EvalContext, params: SeriesParams,
                groups=None) -> SeriesResult:
    n_idx = tuple(int(v) for v in n_idx)
    order = sum(n_idx)
    if order < 2:
        raise ValueError(f"wp_n needs |n| >= 2 for convergence, got |n| = {order}")
    rep = kernel_rep(ctx.level, n_idx)
    X = _as_points(z, ctx.dim)
    g, ng = _groups(len(X), groups)
    tv, tc, tk = rep.terms()
    _set_threads(params)
    acc, cmp, minN = _shells.wp_n_shells(ctx.W, X, g, ng, params.radius, params.pairing,
                                         rep.power, tv, tc, tk)
    cum = _reduce(acc, cmp)
    if _has_origin_singularity(X):
        raise NearSingularityError("wp_n evaluated at a lattice point")
    origin = np.zeros((ng, ctx.dim))
    np.add.at(origin, g, rep.evaluate_batch(X))
    return _finish("wp_n", cum, minN, origin, X, ctx, params,
                   _wp_n_tail_power(order, params.pairing))


def _single(res: SeriesResult) -> CDElement:
    return CDElement(res.value[0].tolist())


def zeta_eval(z, ctx: EvalContext, params: SeriesParams) -> CDElement:
    return _single(zeta_series(z, ctx, params))


def wp_tau_eval(i: int, z, ctx: EvalContext, params: SeriesParams) -> CDElement:
    if not 1 <= i < ctx.dim:
        raise IndexError(f"direction {i} out of range 1..{ctx.dim - 1}")
    res = wp_tau_series(z, ctx, params)
    return CDElement(res.value[0, i - 1].tolist())


def wp_n_eval(n_idx: Sequence[int], z, ctx: EvalContext, params: SeriesParams) -> CDElement:
    return _single(wp_n_series(n_idx, z, ctx, params))


# -- Legendre constants --------------------------------------------------------

@dataclass
class LegendreResult:
    eta: np.ndarray              # (2^k, 2^k), row h = eta_h at the largest radius
    ladder: dict                 # radius -> eta array
    tails: dict                  # radius -> per-h tail estimate
    params: SeriesParams


def legendre_constants(ctx: EvalContext, params: SeriesParams) -> LegendreResult:
    """eta_h = 2 zeta(w_h / 2) for every generator."""
    half = np.asarray(ctx.W) / 2.0
    res = zeta_series(half, ctx, params)
    ladder = {r: 2.0 * res.values[r] for r in res.radii}
    tails = {r: 2.0 * res.tails[r] for r in res.radii}
    return LegendreResult(ladder[res.radii[-1]], ladder, tails, params)


def quasi_periodicity_residual(z, h: int, ctx: EvalContext, params: SeriesParams,
                               eta: Optional[np.ndarray] = None) -> float:
    """|zeta(z + w_h) - zeta(z) - eta_h| at the truncation radius."""
    return float(quasi_periodicity_ladder(z, h, ctx, params, eta)[params.radius])


def quasi_periodicity_ladder(z, h: int, ctx: EvalContext, params: SeriesParams,
                             eta: Optional[np.ndarray] = None) -> dict:
    """Residual for every radius 1..R from a single traversal.

    With eta given, that fixed value is used at every radius; otherwise eta_h
    is recomputed at each radius together with the zeta values.
    """
    return quasi_periodicity_ladders([z], [h], ctx, params, eta)[0]


def quasi_periodicity_ladders(zs, hs, ctx: EvalContext, params: SeriesParams,
                              eta: Optional[np.ndarray] = None) -> list:
    """quasi_periodicity_ladder for several (z, h) pairs sharing one traversal."""
    X = _as_points(zs, ctx.dim)
    hs = [int(h) for h in hs]
    if len(hs) != len(X):
        raise ValueError("need one generator index per point")
    for h in hs:
        if not 0 <= h < ctx.dim:
            raise IndexError(f"generator index {h} out of range")
    W = np.asarray(ctx.W)
    k = len(X)
    pts = np.concatenate([X + W[hs], X, W / 2.0])
    res = zeta_series(pts, ctx, params)
    out = []
    for a, h in enumerate(hs):
        lad = {}
        for r in res.radii:
            v = res.values[r]
            e = 2.0 * v[2 * k + h] if eta is None else np.asarray(eta)
            lad[r] = float(np.linalg.norm(v[a] - v[k + a] - e))
        out.append(lad)
    return out


def float_q0(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return _q0_np(X, X.shape[1] // 2)


def float_qtau(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return _qtau_np(X, X.shape[1] // 2)


__all__ = [
    "NearSingularityError", "SeriesParams", "EvalContext", "SeriesResult",
    "zeta_series", "wp_tau_series", "wp_n_series", "zeta_eval", "wp_tau_eval",
    "wp_n_eval", "legendre_constants", "LegendreResult", "quasi_periodicity_residual",
    "quasi_periodicity_ladder", "quasi_periodicity_ladders", "tail_estimate", "float_mul", "float_q0", "float_qtau",
]
