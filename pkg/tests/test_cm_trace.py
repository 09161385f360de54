from fractions import Fraction as F

import numpy as np
import pytest

from cdelliptic.cd_algebra import CDElement, cd_mul
from cdelliptic.cm_trace import (box_division_points, constants_C, division_set,
                                 empirical_C, relative_gap, trace_lhs, trace_lhs_series,
                                 trace_rhs, trace_rhs_all, verify_trace, zeta_lambda_mu_eval,
                                 zeta_trace_constant)
from cdelliptic.elliptic import EvalContext, SeriesParams, legendre_constants, zeta_series
from cdelliptic.lattice import canonical_cm_lattice, contains, standard_lattice
from cdelliptic.number_field import MQField

Z8 = standard_lattice(3)
CAN = canonical_cm_lattice((2, 3, 5))
K = MQField((2, 3, 5))


def el(*c):
    return CDElement(list(c) + [0] * (8 - len(c)))


ONE = el(1)
LAM = el(1, 1)
MU = el(1, 0, 1)


def test_division_set_scalar_two():
    ds = division_set(Z8, el(2))
    assert len(ds) == 256
    assert {a for c in ds.coefficients for a in c} == {0, F(1, 2)}
    assert ds.coefficients[0] == (0,) * 8


def test_division_set_matches_box_oracle():
    ds = division_set(Z8, LAM)
    assert len(ds) == 16 == ds.norm_product ** 4
    box = box_division_points(Z8, LAM, bound=1)
    exact = np.array([[float(a) for a in c] for c in ds.coefficients])
    assert len(box) == 16
    assert {tuple(np.round(r, 9)) for r in box} == {tuple(np.round(r, 9)) for r in exact}


def test_division_set_two_sided_and_canonical():
    assert len(division_set(Z8, LAM, MU)) == 256
    sq2 = CDElement([0, K.sqrt(1)] + [0] * 6)
    ds = division_set(CAN, sq2)
    assert len(ds) == 16
    assert ds.points.shape == (16, 8)


def test_witnesses_exact():
    ds = division_set(Z8, LAM, MU)
    for idx in (1, 17, 200):
        v = ds.exact_point(idx)
        w = cd_mul(LAM, cd_mul(v, MU))
        assert contains(Z8, w) == ds.witnesses[idx]


def test_box_refuses_huge():
    with pytest.raises(ValueError):
        box_division_points(Z8, LAM, bound=5, max_points=1000)


def test_level_guard():
    with pytest.raises(ValueError):
        division_set(standard_lattice(2), CDElement([1, 1, 0, 0]))


@pytest.fixture(scope="module")
def eta2():
    return legendre_constants(EvalContext.standard(3), SeriesParams(2)).eta


def test_trivial_multiplier(eta2):
    ds = division_set(Z8, ONE)
    assert len(ds) == 1
    assert np.allclose(trace_rhs_all(ds, ds.multiplier, eta2, Z8), 0)
    lhs = trace_lhs_series(ds, EvalContext.standard(3), SeriesParams(1))
    assert not lhs.value.any()


def test_rhs_linear_in_eta(eta2, rng):
    ds = division_set(Z8, LAM, MU)
    other = rng.normal(size=(8, 8))
    a = trace_rhs_all(ds, ds.multiplier, eta2 + 2 * other, Z8)
    b = trace_rhs_all(ds, ds.multiplier, eta2, Z8) + 2 * trace_rhs_all(ds, ds.multiplier, other, Z8)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-9)
    assert np.array_equal(trace_rhs(3, ds, ds.multiplier, eta2, Z8),
                          trace_rhs_all(ds, ds.multiplier, eta2, Z8)[2])


def test_rhs_is_minus_scaled_C(eta2, rng):
    eta = rng.normal(size=(8, 8))
    for lam, mu in ((LAM, None), (LAM, MU)):
        ds = division_set(Z8, lam, mu)
        C = constants_C(ds.multiplier, eta, Z8)
        rhs = trace_rhs_all(ds, ds.multiplier, eta, Z8)
        assert np.abs(rhs + float(ds.norm_product) ** 3 * C).max() <= 1e-12 * max(np.abs(rhs).max(), 1)


def test_real_multiplier_rhs_vanishes_on_Z8(eta2):
    # eta_h is a multiple of conj(e_h) on Z^8, which makes both terms cancel
    ds = division_set(Z8, LAM)
    rhs = trace_rhs_all(ds, ds.multiplier, eta2, Z8)
    assert np.abs(rhs).max() < 1e-9 * np.abs(eta2).max()


def test_bracketings(eta2, rng):
    eta = rng.normal(size=(8, 8))
    ds = division_set(Z8, LAM)
    assert np.allclose(trace_rhs_all(ds, ds.multiplier, eta, Z8, "left"),
                       trace_rhs_all(ds, ds.multiplier, eta, Z8, "right"), rtol=1e-12, atol=1e-12)
    ds2 = division_set(Z8, LAM, MU)
    left = trace_rhs_all(ds2, ds2.multiplier, eta2, Z8, "left")
    right = trace_rhs_all(ds2, ds2.multiplier, eta2, Z8, "right")
    assert np.abs(right).max() < 1e-9 * np.abs(left).max()
    assert np.linalg.norm(left, axis=1).max() > 100
    with pytest.raises(ValueError):
        trace_rhs_all(ds2, ds2.multiplier, eta2, Z8, "middle")


def test_two_sided_lhs_tends_to_zero():
    ctx = EvalContext.standard(3)
    ds = division_set(Z8, LAM, MU)
    res = trace_lhs_series(ds, ctx, SeriesParams(2))
    n1 = np.linalg.norm(res.values[1][0], axis=1)
    n2 = np.linalg.norm(res.values[2][0], axis=1)
    assert np.all(n2 < 0.5 * n1)


def test_zeta_lambda_mu_trivial():
    ctx = EvalContext.standard(3)
    z = el(0.1, 0.2, -0.3, 0.05, 0.1, 0.0, 0.2, -0.1)
    a = zeta_lambda_mu_eval(z, ONE, ONE, ctx, SeriesParams(1))
    b = zeta_series(z.to_float(), ctx, SeriesParams(1)).value[0]
    assert np.allclose(a.to_float(), b, rtol=1e-14)
    c = zeta_lambda_mu_eval(z, LAM, ONE, ctx, SeriesParams(1), bracketing="right")
    d = zeta_lambda_mu_eval(z, LAM, ONE, ctx, SeriesParams(1))
    assert np.allclose(c.to_float(), d.to_float(), rtol=1e-13)


def test_zeta_trace_constant_and_lhs():
    ctx = EvalContext.standard(3)
    ds = division_set(Z8, LAM)
    zt = zeta_trace_constant(ds, ctx, SeriesParams(1))
    assert np.allclose(zt.C, -zt.total / 8)
    each = zeta_series(ds.nonzero_points(), ctx, SeriesParams(1)).value
    assert np.allclose(zt.total, each.sum(axis=0), rtol=1e-12)
    l3 = trace_lhs(3, ds, ctx, SeriesParams(1))
    assert np.allclose(l3.to_float(), trace_lhs_series(ds, ctx, SeriesParams(1)).value[0, 2])
    with pytest.raises(IndexError):
        trace_lhs(0, ds, ctx, SeriesParams(1))


def test_empirical_C_shapes(rng):
    ctx = EvalContext.standard(3)
    ds = division_set(Z8, LAM)
    zs = rng.uniform(0.05, 0.3, size=(2, 8))
    emp = empirical_C(zs, ds, ctx, SeriesParams(2))
    assert emp.radius == 2
    assert emp.values[2].shape == (2, 7, 8)
    assert emp.tails[2].shape == (2, 7)


def test_relative_gap():
    a = np.array([[1.0, 0.0], [0.0, 0.0]])
    b = np.array([[1.1, 0.0], [0.0, 0.0]])
    g = relative_gap(a, b)
    assert g[0] == pytest.approx(0.1 / 1.1)
    assert g[1] == 0


def test_canonical_trace_converges():
    sq2 = CDElement([0, K.sqrt(1)] + [0] * 6)
    rep = verify_trace(CAN, sq2, radii=(1, 2, 3), params=SeriesParams(3))
    assert rep.division_points == 16
    assert rep.identity_residual <= 1e-12
    assert rep.active == list(range(1, 8))
    g = rep.relative_gap
    assert np.all(g[3] <= g[1])
    assert np.max(g[3]) < 0.1
