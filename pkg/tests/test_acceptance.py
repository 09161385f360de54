"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 7-9 run full lattice sums up to R = 6 and take tens of minutes on a
single core.
"""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from cdelliptic.cd_algebra import CDElement, basis_product, cd_mul, float_mul, identity_suite
from cdelliptic.cm_trace import division_set, empirical_C, verify_trace
from cdelliptic.elliptic import (EvalContext, SeriesParams, float_q0, quasi_periodicity_ladders,
                                 wp_tau_series, zeta_series)
from cdelliptic.kernels import dirac_residual, q0, qn_eval, residual_size, tau
from cdelliptic.lattice import (adjugate_residual, brandt_check, canonical_cm_lattice,
                                cm_multiplier_matrix, is_closed_under_multiplication,
                                standard_lattice)
from cdelliptic.number_field import MQField

from oracles import table_entry

Z8 = standard_lattice(3)
LAM = CDElement([1, 1, 0, 0, 0, 0, 0, 0])


def test_criterion_1_identities(criterion):
    t0 = time.perf_counter()
    k3 = identity_suite(3, trials=1000, seed=1,
                        names=["moufang", "flexible", "alternative", "quadratic", "norm_composition"])
    k2 = identity_suite(2, trials=1000, seed=2, names=["associative"])
    k4 = identity_suite(4, trials=1000, seed=3, names=["norm_composition", "power_associative"])
    dt = time.perf_counter() - t0
    ok = (all(c.holds for c in k3.checks.values())
          and k2.checks["associative"].holds
          and not k4.checks["norm_composition"].holds
          and k4.checks["norm_composition"].witness is not None
          and k4.checks["power_associative"].holds
          and dt < 30)
    criterion(1, ok, f"{dt:.1f}s")
    assert ok


def test_criterion_2_octonion_table(criterion):
    t0 = time.perf_counter()
    bad = [(i, j) for i in range(1, 8) for j in range(1, 8) if basis_product(i, j, 3) != table_entry(i, j)]
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1
    criterion(2, ok, f"49 entries, mismatches {bad}, {dt:.3f}s")
    assert ok


def _random_points(rng, n, lo, hi):
    d = rng.normal(size=(n, 8))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * rng.uniform(lo, hi, size=(n, 1))


def test_criterion_3_kernel_regularity(criterion, rng):
    t0 = time.perf_counter()
    kernels = [("q0", q0)] + [(f"q_tau({i})", (lambda i: lambda w: qn_eval(tau(i, 3), w))(i))
                              for i in range(1, 8)]
    worst = math.inf
    for x in _random_points(rng, 20, 0.5, 3.0):
        z = CDElement(x.tolist())
        for name, f in kernels:
            for side in ("left", "right"):
                r1 = residual_size(dirac_residual(f, z, 1e-3, side))
                r2 = residual_size(dirac_residual(f, z, 5e-4, side))
                worst = min(worst, math.log2(r1 / r2))
    dt = time.perf_counter() - t0
    ok = worst >= 1.8 and dt < 10
    criterion(3, ok, f"min order {worst:.3f}, {dt:.1f}s")
    assert ok


def _transformation_residuals(rng, bracketing):
    out = []
    for _ in range(100):
        z, lam, mu = rng.normal(size=(3, 8))
        u = float_mul(lam, float_mul(z, mu))
        k = float_q0(u)[0]
        if bracketing == "left":
            lhs = float_mul(float_mul(mu, k), lam)
        else:
            lhs = float_mul(mu, float_mul(k, lam))
        rhs = float_q0(z)[0] / (mu @ mu * (lam @ lam)) ** 3
        out.append(np.linalg.norm(lhs - rhs) / np.linalg.norm(float_q0(z)[0]))
    return np.array(out)


@pytest.mark.xfail(strict=True, reason="the law does not hold with (mu q0) lam bracketing for "
                                       "generic non-real lam and mu; see the right-bracketed companion")
def test_criterion_4_transformation_law(criterion, rng):
    t0 = time.perf_counter()
    res = _transformation_residuals(rng, "left")
    dt = time.perf_counter() - t0
    ok = res.max() <= 1e-10 and dt < 5
    criterion(4, ok, f"max relative residual {res.max():.3g} over 100 triples, "
                     f"{int((res > 1e-10).sum())} above 1e-10, {dt:.2f}s")
    assert ok


def test_criterion_4_companion_right_bracketing(rng):
    res = _transformation_residuals(rng, "right")
    print(f"mu (q0 lam) bracketing: max relative residual {res.max():.3g}")
    assert res.max() <= 1e-10


def _exact_product(L, lam, mu, h):
    from cdelliptic.lattice import _lift_to, _simplify

    f = L.field
    return cd_mul(_lift_to(lam, f), cd_mul(_lift_to(L.generators[h], f), _lift_to(mu, f))).map(_simplify)


def test_criterion_5_cm_lattices(criterion):
    t0 = time.perf_counter()
    K = MQField((2, 3, 5))
    alphas = [{}, {"1": 2}, {"1": 2, "3": 3}, {"2": -1, "3": 4}]
    lattices = [canonical_cm_lattice((2, 3, 5), a) for a in alphas]
    closed = all(is_closed_under_multiplication(L) for L in lattices)
    brandt = all(brandt_check(a, b, "integral") for L in lattices
                 for a in L.generators for b in L.generators)
    one = CDElement.scalar(1, 3)
    cases = [(Z8, CDElement.scalar(2, 3)), (Z8, LAM),
             (lattices[0], CDElement([0, K.sqrt(1)] + [0] * 6))]
    recon = True
    for L, lam in cases:
        cm = cm_multiplier_matrix(L, lam)
        for h in range(8):
            recon &= cm.reconstruct(L, h) == _exact_product(L, lam, one, h)
    adj = all(all(x == 0 for x in adjugate_residual(L)) for L in lattices + [Z8])
    dt = time.perf_counter() - t0
    ok = closed and brandt and recon and adj and dt < 10
    criterion(5, ok, f"closure {closed}, Brandt {brandt}, reconstruction {recon}, "
                     f"adjugate {adj}, {dt:.1f}s")
    assert ok


def test_criterion_6_division_sets(criterion):
    t0 = time.perf_counter()
    two = division_set(Z8, CDElement.scalar(2, 3))
    coords = {a for c in two.coefficients for a in c}
    one_e1 = division_set(Z8, LAM)
    dt = time.perf_counter() - t0
    ok = len(two) == 256 and coords == {0, F(1, 2)} and len(one_e1) == 16 and dt < 30
    criterion(6, ok, f"lambda=2: {len(two)} points, coordinates {sorted(coords)}; "
                     f"lambda=1+e1: {len(one_e1)} points, {dt:.1f}s")
    assert ok


def test_criterion_7_series_invariants(criterion, rng):
    t0 = time.perf_counter()
    ctx = EvalContext.standard(3)
    P5 = SeriesParams(5)
    pts = rng.uniform(0.05, 0.95, size=(10, 8))
    both = np.concatenate([pts, -pts])
    zv = zeta_series(both, ctx, P5).value
    odd = max(np.linalg.norm(zv[a] + zv[10 + a]) / np.linalg.norm(zv[a]) for a in range(10))
    wv = wp_tau_series(both, ctx, P5).value
    even = max(np.linalg.norm(wv[a] - wv[10 + a]) / np.linalg.norm(wv[a]) for a in range(10))
    zs = rng.uniform(0.05, 0.95, size=(5, 8))
    hs = rng.integers(8, size=5)
    factors = [lad[3] / lad[6] for lad in quasi_periodicity_ladders(zs, hs, ctx, SeriesParams(6))]
    dt = time.perf_counter() - t0
    ok = odd <= 1e-2 and even <= 1e-2 and min(factors) >= 2
    criterion(7, ok, f"oddness {odd:.2g}, evenness {even:.2g}, quasi-periodicity R3/R6 factors "
                     f"{', '.join(f'{f:.2f}' for f in factors)}, {dt / 60:.1f} min")
    assert ok


@pytest.fixture(scope="module")
def z8_report():
    t0 = time.perf_counter()
    rep = verify_trace(Z8, LAM, radii=(3, 4, 5, 6))
    return rep, time.perf_counter() - t0


def test_criterion_8_trace_formula(criterion, z8_report):
    rep, dt = z8_report
    # On Z^8 every rhs_i vanishes identically (eta_h is a multiple of conj(e_h)),
    # so the gap condition has no active direction; the distance |lhs - rhs|
    # itself must then shrink along the ladder.
    dist = {r: np.linalg.norm(rep.lhs[r] - rep.rhs[r], axis=1) for r in rep.radii}
    trend = all(np.all(dist[b] <= dist[a] * 1.2) for a, b in zip(rep.radii, rep.radii[1:]))
    ok = rep.passed and trend
    R = rep.radii[-1]
    criterion(8, ok, f"active directions {rep.active}, identity residual {rep.identity_residual:.2g}, "
                     f"max |lhs-rhs| by R: "
                     + ", ".join(f"{r}:{dist[r].max():.3g}" for r in rep.radii)
                     + f", max gap at R={R}: "
                     + (f"{max(rep.relative_gap[R][i - 1] for i in rep.active):.3g}" if rep.active else "n/a")
                     + f", {dt / 60:.1f} min")
    assert ok


def test_criterion_8_companion_canonical_lattice():
    """A case with nonzero rhs: canonical lattice for (2, 3, 5), lambda = sqrt(2) e1."""
    L = canonical_cm_lattice((2, 3, 5))
    lam = CDElement([0, MQField((2, 3, 5)).sqrt(1)] + [0] * 6)
    rep = verify_trace(L, lam, radii=(2, 3, 4))
    R = rep.radii[-1]
    print("canonical lattice gaps at R=4:", np.round(rep.relative_gap[R], 4))
    assert rep.active == list(range(1, 8))
    assert rep.passed


def test_criterion_9_C_independent_of_z(criterion, rng):
    t0 = time.perf_counter()
    ds = division_set(Z8, LAM)
    zs = rng.uniform(0.1, 0.4, size=(3, 8))
    emp = empirical_C(zs, ds, EvalContext.standard(3), SeriesParams(5))
    v, tl = emp.values[5], emp.tails[5]
    worst = 0.0
    for a in range(3):
        for b in range(a + 1, 3):
            d = np.linalg.norm(v[a] - v[b], axis=1)
            worst = max(worst, float(np.max(d / (2 * np.maximum(tl[a], tl[b])))))
    dt = time.perf_counter() - t0
    ok = worst <= 1
    criterion(9, ok, f"max pairwise difference / (2 x tail) = {worst:.3f}, "
                     f"max |f_i| {np.linalg.norm(v, axis=2).max():.3g}, {dt / 60:.1f} min")
    assert ok
