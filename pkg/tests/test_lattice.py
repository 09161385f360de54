from fractions import Fraction as F

import pytest

from cdelliptic.cd_algebra import CDElement, cd_mul
from cdelliptic.lattice import (NotAMultiplierError, SingularLatticeError, adjugate_residual,
                                brandt_check, canonical_cm_lattice, cm_multiplier_matrix, contains,
                                is_closed_under_multiplication, lattice_from_generators,
                                standard_lattice)
from cdelliptic.number_field import MQField

Z8 = standard_lattice(3)
CAN = canonical_cm_lattice((2, 3, 5))
K = MQField((2, 3, 5))


def el(*c):
    return CDElement(list(c) + [0] * (8 - len(c)))


def test_standard_lattice():
    assert Z8.det == 1
    assert all(Z8.W[i][j] == (1 if i == j else 0) for i in range(8) for j in range(8))


def test_canonical_det_and_generators():
    assert CAN.det == 900  # sqrt(2 3 5 6 10 15 30)
    assert CAN.generators[4] == CDElement([0] * 4 + [K.sqrt_of(6)] + [0] * 3)
    half = canonical_cm_lattice((2, 3, 5), {"1": "1/2"})
    assert half.generators[1].coords[1] == K.sqrt(1, F(1, 2))
    small = canonical_cm_lattice((2,))
    assert small.generators[1].coords[1] == MQField((2,)).sqrt(1)


def test_singular_generators():
    with pytest.raises(SingularLatticeError):
        lattice_from_generators([el(1), el(1)] + [CDElement.basis(i, 3) for i in range(2, 8)])


def test_adjugate_identity_exact():
    for L in (Z8, CAN, canonical_cm_lattice((2, 3, 7), {"1,2": 3, "3": 2})):
        assert all(x == 0 for x in adjugate_residual(L))


def test_contains():
    assert contains(CAN, CAN.generators[2]) == (0, 0, 1, 0, 0, 0, 0, 0)
    assert contains(CAN, CAN.generators[1] * F(1, 2)) is None
    assert contains(CAN, cd_mul(CAN.generators[1], CAN.generators[2])) is not None


def test_closure():
    assert is_closed_under_multiplication(Z8)
    assert is_closed_under_multiplication(CAN)
    assert is_closed_under_multiplication(canonical_cm_lattice((2, 3, 5), {"1": 2, "3": 3}))
    # overriding a product coefficient breaks w_2 w_3 in L
    assert not is_closed_under_multiplication(canonical_cm_lattice((2, 3, 5), {"2,3": 2}))
    assert not is_closed_under_multiplication(canonical_cm_lattice((2, 3, 5), {"1": F(1, 2)}))


def test_brandt():
    e1 = CDElement.basis(1, 3)
    assert brandt_check(e1, e1, "integral")
    assert brandt_check(el(F(1, 2), F(1, 2)), el(1), "integral")
    assert not brandt_check(el(F(1, 2), F(1, 3)), el(0, 1), "integral")
    assert not brandt_check(CDElement([K.sqrt(1)] + [0] * 7), el(1), "rational")
    assert all(brandt_check(a, b) for a in CAN.generators for b in CAN.generators)


def test_multiplier_rows():
    cm = cm_multiplier_matrix(Z8, el(1, 1))
    assert cm.n[0] == (1, 1, 0, 0, 0, 0, 0, 0)
    assert cm.n[2] == (0, 0, 1, 0, 1, 0, 0, 0)
    lam = CDElement([0, K.sqrt(1)] + [0] * 6)
    cm = cm_multiplier_matrix(CAN, lam)
    assert cm.n[2] == (0, 0, 0, 0, 1, 0, 0, 0)
    for L, c in ((Z8, cm_multiplier_matrix(Z8, el(2))), (CAN, cm)):
        for h in range(8):
            assert c.reconstruct(L, h) == cd_mul(c.lam, cd_mul(L.generators[h], c.mu)).map(
                lambda x: x.coeffs[0] if hasattr(x, "coeffs") and x.is_rational() else x)


def test_two_sided_multiplier():
    cm = cm_multiplier_matrix(Z8, el(1, 1), el(1, 0, 1))
    for h in range(8):
        assert cm.reconstruct(Z8, h) == cd_mul(el(1, 1), cd_mul(Z8.generators[h], el(1, 0, 1)))


def test_not_a_multiplier():
    with pytest.raises(NotAMultiplierError) as info:
        cm_multiplier_matrix(Z8, el(F(1, 3)))
    assert info.value.h == 0
