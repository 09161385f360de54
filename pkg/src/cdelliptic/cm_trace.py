"""Division values of CM lattices and the trace formula for wp_i.

For a CM pair (lam, mu) with lam (w_h mu) = sum_j n[h][j] w_j, the points
v = (lam^-1 w) mu^-1 of the fundamental cell are the poles of
zeta_{lam,mu}(z) = (mu zeta(lam (z mu))) lam.  Their number is
(N(lam) N(mu))^4, and

    sum_{v != 0} wp_i(v) = -(N(lam) N(mu))^3 C_i,
    C_i = [sum_h theta[h][i] (mu s_h) lam - N(lam) N(mu) sum_h theta[h][i] eta_h] / det W,

with s_h = sum_j n[h][j] eta_j.  Everything here is octonionic (level 3).
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .cd_algebra import CDElement, cd_mul, float_mul, norm
from .elliptic import (EvalContext, SeriesParams, SeriesResult, tail_estimate,
                       wp_tau_series, zeta_series, _embed_scalar)
from .lattice import CMMultiplier, Lattice, cm_multiplier_matrix, gauss_jordan

GAP_FLOOR = 1e-30
SNAP = 1e-9

# (mu x) lam is the bracketing used in the formulas as stated; mu (x lam) is the
# one under which the two-sided transformation law actually holds.  They agree
# whenever mu or lam is real.
BRACKETINGS = ("left", "right")


def _apply(mu, x, lam, bracketing: str = "left"):
    if bracketing == "left":
        return float_mul(float_mul(mu, x), lam)
    if bracketing == "right":
        return float_mul(mu, float_mul(x, lam))
    raise ValueError(f"bracketing must be one of {BRACKETINGS}")


class CardinalityError(AssertionError):
    def __init__(self, found: int, expected: int):
        super().__init__(f"division set has {found} points, expected {expected}")
        self.found = found
        self.expected = expected


def _rational(x) -> Fraction:
    from .number_field import MQElement

    if isinstance(x, MQElement):
        if not x.is_rational():
            raise ValueError(f"{x} is not rational")
        return x.coeffs[0]
    return Fraction(x)


def _require_octonions(L: Lattice):
    if L.level != 3:
        raise ValueError(f"the trace formula is implemented for octonions (level 3), got level {L.level}")


@dataclass(frozen=True)
class DivisionSet:
    lattice: Lattice
    lam: CDElement
    mu: CDElement
    multiplier: CMMultiplier
    coefficients: tuple          # W-coordinates in [0, 1), exact Fractions; first is 0
    witnesses: tuple             # integer coefficients of w with lam (v mu) = w
    norm_product: Fraction       # N(lam) N(mu)

    def __len__(self):
        return len(self.coefficients)

    @property
    def points(self) -> np.ndarray:
        """Float coordinates of every v, shape (|V|, 8)."""
        W = _float_matrix(self.lattice.W)
        return np.array([[float(a) for a in c] for c in self.coefficients]) @ W

    def nonzero_points(self) -> np.ndarray:
        return self.points[1:]

    def exact_point(self, idx: int) -> CDElement:
        L = self.lattice
        out = None
        for a, g in zip(self.coefficients[idx], L.generators):
            if a:
                t = g * a
                out = t if out is None else out + t
        return out if out is not None else CDElement.scalar(0, L.level)


def _float_matrix(M) -> np.ndarray:
    return np.array([[_embed_scalar(x) for x in row] for row in M], dtype=np.float64)


def _mod1(v):
    return tuple(x - math.floor(x) for x in v)


def division_set(L: Lattice, lam: CDElement, mu: Optional[CDElement] = None) -> DivisionSet:
    """All v = (lam^-1 w) mu^-1 in the fundamental cell, built by exact group closure.

    In W-coordinates, lam (v mu) has coefficients a . n, so V is the finite
    group Z^8 n^-1 / Z^8 generated by the rows of n^-1 taken mod 1.
    """
    _require_octonions(L)
    cm = cm_multiplier_matrix(L, lam, mu)
    mu = cm.mu
    n = [[Fraction(x) for x in row] for row in cm.n]
    det, inv = gauss_jordan(n)
    gens = [_mod1(row) for row in inv]
    zero = tuple(Fraction(0) for _ in range(L.dim))
    seen = {zero}
    order = [zero]
    queue = deque([zero])
    while queue:
        a = queue.popleft()
        for g in gens:
            b = _mod1(x + y for x, y in zip(a, g))
            if b not in seen:
                seen.add(b)
                order.append(b)
                queue.append(b)
    npr = _rational(norm(cm.lam)) * _rational(norm(mu))
    expected = npr ** 4
    if len(order) != expected or abs(det) != expected:
        raise CardinalityError(len(order), int(expected))
    coeffs = tuple(order[:1] + sorted(order[1:]))
    wit = tuple(tuple(int(sum(a[h] * n[h][j] for h in range(L.dim))) for j in range(L.dim))
                for a in coeffs)
    return DivisionSet(L, cm.lam, mu, cm, coeffs, wit, npr)


def box_division_points(L: Lattice, lam: CDElement, mu: Optional[CDElement] = None,
                        bound: Optional[int] = None, max_points: int = 5_000_000) -> np.ndarray:
    """Float enumeration of v = (lam^-1 w) mu^-1 for w in a coefficient box, reduced
    into the fundamental cell with wrap-snapping; returns distinct W-coordinates.

    The default bound ceil(|lam| |mu| sum_h |w_h| / shortest) + 1 is rarely
    affordable at level 3; pass a small bound to use this as a cross-check.
    """
    mu = mu if mu is not None else CDElement.scalar(1, L.level)
    W = _float_matrix(L.W)
    lengths = np.linalg.norm(W, axis=1)
    lam_f = np.array([_embed_scalar(x) for x in lam.coords])
    mu_f = np.array([_embed_scalar(x) for x in mu.coords])
    if bound is None:
        bound = math.ceil(np.linalg.norm(lam_f) * np.linalg.norm(mu_f) * lengths.sum() / lengths.min()) + 1
    side = 2 * bound + 1
    if side ** L.dim > max_points:
        raise ValueError(f"box of radius {bound} has {side ** L.dim} points (limit {max_points})")
    lam_inv = lam_f * np.r_[1.0, -np.ones(L.dim - 1)] / (lam_f @ lam_f)
    mu_inv = mu_f * np.r_[1.0, -np.ones(L.dim - 1)] / (mu_f @ mu_f)
    C = np.array(list(itertools.product(range(-bound, bound + 1), repeat=L.dim)), dtype=np.float64)
    w = C @ W
    v = float_mul(float_mul(lam_inv, w), mu_inv)
    a = v @ np.linalg.inv(W)
    a = a - np.floor(a)
    a[np.abs(a - 1.0) < SNAP] = 0.0
    a[np.abs(a) < SNAP] = 0.0
    return np.unique(np.round(a, 9), axis=0)


# -- closed forms ----------------------------------------------------------------

def _theta_det(L: Lattice):
    return _float_matrix(L.theta), _embed_scalar(L.det)


def _float_el(z: CDElement) -> np.ndarray:
    return np.array([_embed_scalar(x) for x in z.coords])


def _bracket(cm: CMMultiplier, eta: np.ndarray, L: Lattice, npr: float,
             bracketing: str = "left") -> np.ndarray:
    """Rows i = 1..7 of sum_h theta[h][i] (mu s_h) lam - npr sum_h theta[h][i] eta_h."""
    theta, _ = _theta_det(L)
    n = np.array(cm.n, dtype=np.float64)
    lam, mu = _float_el(cm.lam), _float_el(cm.mu)
    s = n @ eta
    ms_l = _apply(mu, s, lam, bracketing)
    return theta.T[1:] @ ms_l - npr * (theta.T[1:] @ eta)


def constants_C(cm: CMMultiplier, eta: np.ndarray, L: Lattice, bracketing: str = "left") -> np.ndarray:
    """C_1..C_7 as an array of shape (7, 8)."""
    _require_octonions(L)
    npr = float(_rational(norm(cm.lam)) * _rational(norm(cm.mu)))
    _, det = _theta_det(L)
    return _bracket(cm, np.asarray(eta, dtype=np.float64), L, npr, bracketing) / det


def trace_rhs(i: int, ds: DivisionSet, cm: CMMultiplier, eta: np.ndarray, L: Lattice,
              bracketing: str = "left") -> np.ndarray:
    """-(N(lam) N(mu))^3 / det W * [...] for direction i."""
    _require_octonions(L)
    if not 1 <= i <= 7:
        raise IndexError(f"direction {i} out of range 1..7")
    return trace_rhs_all(ds, cm, eta, L, bracketing)[i - 1]


def trace_rhs_all(ds: DivisionSet, cm: CMMultiplier, eta: np.ndarray, L: Lattice,
                  bracketing: str = "left") -> np.ndarray:
    npr = float(ds.norm_product)
    theta, det = _theta_det(L)
    eta = np.asarray(eta, dtype=np.float64)
    scale = -(npr ** 3) / det
    n = np.array(cm.n, dtype=np.float64)
    lam, mu = _float_el(cm.lam), _float_el(cm.mu)
    out = np.empty((7, 8))
    for i in range(1, 8):
        first = np.zeros(8)
        second = np.zeros(8)
        for h in range(8):
            s_h = n[h] @ eta
            first += theta[h, i] * _apply(mu, s_h, lam, bracketing)
            second += theta[h, i] * eta[h]
        out[i - 1] = scale * first - scale * npr * second
    return out


# -- lattice sums over division points ----------------------------------------

def trace_lhs_series(ds: DivisionSet, ctx: EvalContext, params: SeriesParams) -> SeriesResult:
    """sum_{v != 0} wp_i(v) for all i in one traversal; values shape (1, 7, 8)."""
    V = ds.nonzero_points()
    if len(V) == 0:
        zero = np.zeros((1, 7, 8))
        radii = list(range(1, params.radius + 1))
        return SeriesResult("wp_tau", radii, {r: zero for r in radii},
                            {r: np.zeros((1, 7)) for r in radii}, math.inf, params)
    return wp_tau_series(V, ctx, params, groups=np.zeros(len(V), dtype=np.int64))


def trace_lhs(i: int, ds: DivisionSet, ctx: EvalContext, params: SeriesParams) -> CDElement:
    if not 1 <= i <= 7:
        raise IndexError(f"direction {i} out of range 1..7")
    return CDElement(trace_lhs_series(ds, ctx, params).value[0, i - 1].tolist())


def zeta_lambda_mu_eval(z, lam: CDElement, mu: CDElement, ctx: EvalContext,
                        params: SeriesParams, bracketing: str = "left") -> CDElement:
    """(mu zeta(lam (z mu))) lam, or mu (zeta(...) lam) with bracketing='right'."""
    x = z.to_float() if isinstance(z, CDElement) else np.asarray(z, dtype=np.float64)
    lam_f, mu_f = _float_el(lam), _float_el(mu)
    u = float_mul(lam_f, float_mul(x, mu_f))
    zeta_u = zeta_series(u, ctx, params).value[0]
    return CDElement(_apply(mu_f, zeta_u, lam_f, bracketing).tolist())


@dataclass
class ZetaTrace:
    total: np.ndarray           # sum_{v != 0} zeta(v)
    C: np.ndarray               # total / -(N(lam) N(mu))^3
    ladder: dict
    tail: np.ndarray


def zeta_trace_constant(ds: DivisionSet, ctx: EvalContext, params: SeriesParams) -> ZetaTrace:
    V = ds.nonzero_points()
    npr = float(ds.norm_product)
    if len(V) == 0:
        return ZetaTrace(np.zeros(8), np.zeros(8), {params.radius: np.zeros(8)}, np.zeros(1))
    res = zeta_series(V, ctx, params, groups=np.zeros(len(V), dtype=np.int64))
    ladder = {r: res.values[r][0] for r in res.radii}
    total = res.value[0]
    return ZetaTrace(total, -total / npr ** 3, ladder, res.tail)


# -- constants C_i from the derivative of zeta_{lam,mu} -------------------------

@dataclass
class EmpiricalC:
    points: np.ndarray          # the sample z, shape (Z, 8)
    values: dict                # radius -> f_i(z), shape (Z, 7, 8)
    tails: dict                 # radius -> tail estimate, shape (Z, 7)

    @property
    def radius(self) -> int:
        return max(self.values)


def empirical_C(zs, ds: DivisionSet, ctx: EvalContext, params: SeriesParams,
                bracketing: str = "left") -> EmpiricalC:
    """f_i(z) = d/dx_i zeta_{lam,mu}(z) - (N(lam) N(mu))^-3 sum_{v in V} wp_i(z + v).

    The first term uses the chain rule with u = lam (z mu), du/dx_i = lam (e_i mu)
    and left regularity of the truncated zeta: d zeta/dx_0 = -sum_j e_j wp_j.
    One lattice traversal serves every sample point.
    """
    Z = np.atleast_2d(np.asarray(zs, dtype=np.float64))
    nz = len(Z)
    lam, mu = _float_el(ds.lam), _float_el(ds.mu)
    npr = float(ds.norm_product)
    U = float_mul(lam[None], float_mul(Z, mu[None]))
    V = ds.points
    shifted = (Z[:, None, :] + V[None, :, :]).reshape(-1, 8)
    pts = np.concatenate([U, shifted])
    groups = np.concatenate([np.arange(nz), nz + np.repeat(np.arange(nz), len(V))])
    res = wp_tau_series(pts, ctx, params, groups=groups)
    E = np.eye(8)
    D = np.array([float_mul(lam, float_mul(E[i], mu)) for i in range(1, 8)])  # (7, 8)
    values = {}
    for r in res.radii:
        wp = res.values[r]
        out = np.empty((nz, 7, 8))
        for a in range(nz):
            P = wp[a]                                        # wp_j(u), j = 1..7
            d0 = -float_mul(E[1:], P).sum(axis=0)            # d zeta / dx_0 at u
            for i in range(7):
                d = D[i]
                G = d[0] * d0 + d[1:] @ P
                out[a, i] = _apply(mu, G, lam, bracketing) - wp[nz + a, i] / npr ** 3
        values[r] = out
    tails = {r: tail_estimate(values[r], values[r - 1] if r > 1 else values[r], r, 2)
             for r in res.radii}
    return EmpiricalC(Z, values, tails)


# -- end-to-end verification ---------------------------------------------------

@dataclass
class TraceReport:
    lam: list
    mu: list
    division_points: int
    radii: list
    lhs: dict                   # radius -> (7, 8)
    rhs: dict
    C: dict
    relative_gap: dict          # radius -> (7,)
    eta: dict                   # radius -> (8, 8)
    zeta_trace: dict            # radius -> (8,)
    zeta_C: dict
    identity_residual: float    # max |rhs_i + (N N)^3 C_i| / max(|rhs_i|, 1)
    active: list                # directions i with |rhs_i| above the threshold at the largest radius
    lhs_tail: np.ndarray
    params: dict
    tolerance: float
    jitter: float
    threshold: float

    def gaps_ok(self) -> bool:
        R = self.radii[-1]
        return all(self.relative_gap[R][i - 1] <= self.tolerance for i in self.active)

    def trend_ok(self) -> bool:
        for i in self.active:
            seq = [self.relative_gap[r][i - 1] for r in self.radii]
            if any(b > a * (1 + self.jitter) for a, b in zip(seq, seq[1:])):
                return False
        return True

    @property
    def passed(self) -> bool:
        return self.gaps_ok() and self.trend_ok() and self.identity_residual <= 1e-12


def relative_gap(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    a = np.linalg.norm(lhs, axis=-1)
    b = np.linalg.norm(rhs, axis=-1)
    return np.linalg.norm(lhs - rhs, axis=-1) / np.maximum(np.maximum(a, b), GAP_FLOOR)


def verify_trace(L: Lattice, lam: CDElement, mu: Optional[CDElement] = None,
                 radii: Sequence[int] = (3, 4, 5, 6), params: Optional[SeriesParams] = None,
                 tolerance: float = 0.1, jitter: float = 0.2, threshold: float = 1e-6,
                 ds: Optional[DivisionSet] = None, progress=None,
                 bracketing: str = "left") -> TraceReport:
    """Run the trace formula over a radius ladder with one traversal per series kind."""
    _require_octonions(L)
    radii = sorted(set(int(r) for r in radii))
    base = params or SeriesParams()
    params = base.with_radius(radii[-1])
    ds = ds or division_set(L, lam, mu)
    cm = ds.multiplier
    ctx = EvalContext.from_lattice(L)
    npr = float(ds.norm_product)
    if progress:
        progress(f"division set: {len(ds)} points; zeta traversal to R={params.radius}")
    # eta_h at w_h / 2 and zeta at the nonzero division points share one traversal
    half = ctx.W / 2.0
    V = ds.nonzero_points()
    zpts = np.concatenate([half, V])
    groups = np.concatenate([np.arange(8), np.full(len(V), 8)])
    zres = zeta_series(zpts, ctx, params, groups=groups)
    if progress:
        progress(f"wp traversal to R={params.radius}")
    lres = trace_lhs_series(ds, ctx, params)
    lhs, rhs, Cs, gaps, etas, zt, zc = {}, {}, {}, {}, {}, {}, {}
    ident = 0.0
    for r in radii:
        eta = 2.0 * zres.values[r][:8]
        etas[r] = eta
        rhs[r] = trace_rhs_all(ds, cm, eta, L, bracketing)
        Cs[r] = constants_C(cm, eta, L, bracketing)
        lhs[r] = lres.values[r][0]
        gaps[r] = relative_gap(lhs[r], rhs[r])
        zt[r] = zres.values[r][8] if len(V) else np.zeros(8)
        zc[r] = -zt[r] / npr ** 3
        resid = np.linalg.norm(rhs[r] + npr ** 3 * Cs[r], axis=1)
        ident = max(ident, float(np.max(resid / np.maximum(np.linalg.norm(rhs[r], axis=1), 1.0))))
    R = radii[-1]
    active = [i for i in range(1, 8) if np.linalg.norm(rhs[R][i - 1]) > threshold]
    return TraceReport(
        lam=[str(x) for x in ds.lam.coords], mu=[str(x) for x in ds.mu.coords],
        division_points=len(ds), radii=radii, lhs=lhs, rhs=rhs, C=Cs, relative_gap=gaps,
        eta=etas, zeta_trace=zt, zeta_C=zc, identity_residual=ident, active=active,
        lhs_tail=lres.tail[0], params={"radius": R, "eps": params.eps, "pairing": params.pairing,
                                       "precision": params.precision, "bracketing": bracketing},
        tolerance=tolerance, jitter=jitter, threshold=threshold)
