from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from cdelliptic.number_field import (FieldMismatchError, MQField, format_mq, mq_embed,
                                     mq_inverse, mq_mul, parse_mq)

K = MQField((2, 3, 5))


def coeff():
    return st.fractions(min_value=-6, max_value=6, max_denominator=6)


mq = st.lists(coeff(), min_size=8, max_size=8).map(K.element)


def test_radical_products():
    r2, r3 = K.sqrt(1), K.sqrt(2)
    assert mq_mul(r2, r3) == K.sqrt(3)
    assert mq_mul(r2, r2) == 2
    one = K.one()
    assert mq_mul(one + r2, one - r2) == -1


def test_square_free_renormalisation():
    L = MQField((2, 3, 5))
    r6 = L.sqrt_of(6)
    r10 = L.sqrt_of(10)
    assert r6 * r10 == 2 * L.sqrt_of(15)
    assert L.sqrt_of(12) == 2 * L.sqrt_of(3)


def test_inverse_examples():
    assert mq_inverse(K.sqrt(1)) == K.sqrt(1, F(1, 2))
    assert mq_inverse(K.rational(3)) == F(1, 3)
    with pytest.raises(ZeroDivisionError):
        mq_inverse(K.zero())


def test_embed_examples():
    assert mq_embed(K.sqrt(1), 53) == 1.4142135623730951
    assert mq_embed(K.zero(), 53) == 0.0
    assert mq_embed(K.one() + K.sqrt_of(6), 53) == 3.449489742783178


def test_embed_under_cancellation():
    # 1 + sqrt(2) - (very close rational) still rounds correctly
    a = K.sqrt(1) - F(1414213562373095, 10 ** 15)
    import mpmath
    with mpmath.workprec(200):
        ref = mpmath.sqrt(2) - mpmath.mpf(1414213562373095) / 10 ** 15
    assert abs(mq_embed(a) - float(ref)) <= 2 ** -52 * abs(float(ref))


@settings(max_examples=40, deadline=None)
@given(mq, mq, mq)
def test_field_axioms(a, b, c):
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    if a:
        assert a * mq_inverse(a) == 1
    assert abs(mq_embed(a * b) - mq_embed(a) * mq_embed(b)) <= 1e-12 * (1 + abs(mq_embed(a) * mq_embed(b)))


@settings(max_examples=40, deadline=None)
@given(mq)
def test_format_parse_roundtrip(a):
    assert parse_mq(format_mq(a), K) == a


def test_parse_examples():
    assert parse_mq("3/2*sqrt(6) - 1", K) == K.sqrt(3, F(3, 2)) - 1
    assert parse_mq("sqrt(8)", K) == 2 * K.sqrt(1)
    with pytest.raises(ValueError):
        parse_mq("sqrt(7)", K)
    with pytest.raises(ValueError):
        parse_mq("2 3", K)


def test_field_validation():
    with pytest.raises(ValueError):
        MQField((4,))
    with pytest.raises(ValueError):
        MQField((2, 2))
    with pytest.raises(ValueError):
        MQField((2, 3, 6))
    assert MQField((2, 3, 5)) is K


def test_field_mismatch():
    with pytest.raises(FieldMismatchError):
        mq_mul(K.one(), MQField((2, 7)).one())


def test_ordering():
    assert K.sqrt(1) < K.sqrt(2)
    assert -K.sqrt(3) < 0
    assert abs(-K.sqrt(3)) == K.sqrt(3)
