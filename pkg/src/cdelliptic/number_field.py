"""Exact arithmetic in multiquadratic fields Q[sqrt(m_1), ..., sqrt(m_k)].

An element is a vector of 2**k rationals over the radical basis
sqrt(m_T) = sqrt(prod_{i in T} m_i), T running over subsets of {1..k}
encoded as bitmasks (bit i-1 <-> m_i).  Products re-expand with
sqrt(m_S) sqrt(m_T) = (prod_{i in S & T} m_i) sqrt(m_{S ^ T}).
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath

SQUAREFREE_BOUND = 10**6

Rational = Union[int, Fraction]


class FieldMismatchError(ValueError):
    pass


def is_squarefree(m: int, bound: int = SQUAREFREE_BOUND) -> bool:
    if m < 1:
        return False
    if m > bound:
        raise ValueError(f"radicand {m} exceeds the square-free check bound {bound}")
    p = 2
    while p * p <= m:
        if m % (p * p) == 0:
            return False
        p += 1
    return True


def _is_square(q: Fraction) -> bool:
    if q < 0:
        return False
    return (math.isqrt(q.numerator) ** 2 == q.numerator
            and math.isqrt(q.denominator) ** 2 == q.denominator)


class MQField:
    """Q[sqrt(m_1), ..., sqrt(m_k)] for square-free, multiplicatively
    independent radicands m_i >= 2.

    Instances are interned, so fields built from the same radicands compare
    identical.
    """

    _interned: dict = {}

    def __new__(cls, radicands: Sequence[int]):
        radicands = tuple(int(m) for m in radicands)
        field = cls._interned.get(radicands)
        if field is None:
            field = super().__new__(cls)
            field._setup(radicands)
            cls._interned[radicands] = field
        return field

    def _setup(self, radicands: tuple[int, ...]):
        for m in radicands:
            if m < 2 or not is_squarefree(m):
                raise ValueError(f"radicand {m} is not a square-free integer >= 2")
        if len(set(radicands)) != len(radicands):
            raise ValueError(f"radicands must be mutually distinct: {radicands}")
        self.radicands = radicands
        self.k = len(radicands)
        self.dim = 1 << self.k
        # products over subsets; a perfect square would collapse the basis
        self._prod = [math.prod(radicands[i] for i in range(self.k) if T >> i & 1)
                      for T in range(self.dim)]
        for T in range(1, self.dim):
            if math.isqrt(self._prod[T]) ** 2 == self._prod[T]:
                raise ValueError(
                    f"radicands {radicands} are multiplicatively dependent "
                    f"(subset product {self._prod[T]} is a square)")

    def __repr__(self):
        return f"MQField({self.radicands})"

    def __reduce__(self):
        return (MQField, (self.radicands,))

    def radicand(self, T: int) -> int:
        return self._prod[T]

    def element(self, coeffs: Sequence[Rational]) -> "MQElement":
        return MQElement(self, coeffs)

    def rational(self, q: Rational) -> "MQElement":
        return MQElement(self, (Fraction(q),) + (Fraction(0),) * (self.dim - 1))

    def sqrt(self, T: int, coeff: Rational = 1) -> "MQElement":
        """coeff * sqrt(m_T) for the subset bitmask T."""
        c = [Fraction(0)] * self.dim
        c[T] = Fraction(coeff)
        return MQElement(self, c)

    def zero(self) -> "MQElement":
        return self.rational(0)

    def one(self) -> "MQElement":
        return self.rational(1)

    def sqrt_of(self, n: Rational) -> "MQElement":
        """sqrt(n) expressed in the radical basis; ValueError if it is not in the field."""
        n = Fraction(n)
        if n < 0:
            raise ValueError("negative radicand")
        if n == 0:
            return self.zero()
        for T in range(self.dim):
            r = n / self._prod[T]
            if _is_square(r):
                return self.sqrt(T, Fraction(math.isqrt(r.numerator), math.isqrt(r.denominator)))
        raise ValueError(f"sqrt({n}) does not lie in {self}")

    def parse(self, text: str) -> "MQElement":
        return parse_mq(text, self)


def _lift(field: MQField, x) -> "MQElement":
    if isinstance(x, MQElement):
        if x.field is not field:
            raise FieldMismatchError(f"{x.field} vs {field}")
        return x
    if isinstance(x, (int, Fraction)):
        return field.rational(x)
    return NotImplemented


class MQElement:
    """Immutable element of a multiquadratic field."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: MQField, coeffs: Iterable[Rational]):
        coeffs = tuple(Fraction(c) for c in coeffs)
        if len(coeffs) != field.dim:
            raise ValueError(f"expected {field.dim} coefficients, got {len(coeffs)}")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("MQElement is immutable")

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def is_integer(self) -> bool:
        return self.is_rational() and self.coeffs[0].denominator == 1

    def __bool__(self):
        return any(self.coeffs)

    def __eq__(self, other):
        o = _lift(self.field, other) if isinstance(other, (MQElement, int, Fraction)) else NotImplemented
        if o is NotImplemented:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        if self.is_rational():
            return hash(self.coeffs[0])
        return hash((self.field.radicands, self.coeffs))

    def __add__(self, other):
        o = _lift(self.field, other)
        if o is NotImplemented:
            return o
        return MQElement(self.field, (a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return MQElement(self.field, (-a for a in self.coeffs))

    def __sub__(self, other):
        o = _lift(self.field, other)
        if o is NotImplemented:
            return o
        return MQElement(self.field, (a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return MQElement(self.field, (a * other for a in self.coeffs))
        o = _lift(self.field, other)
        if o is NotImplemented:
            return o
        return mq_mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return MQElement(self.field, (a / other for a in self.coeffs))
        o = _lift(self.field, other)
        if o is NotImplemented:
            return o
        return mq_mul(self, mq_inverse(o))

    def __rtruediv__(self, other):
        return mq_mul(_lift(self.field, other), mq_inverse(self))

    def __abs__(self):
        return self if self.sign() >= 0 else -self

    def sign(self) -> int:
        if not self:
            return 0
        return 1 if mq_embed(self, 64) > 0 else -1

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __float__(self):
        return mq_embed(self, 53)

    def conjugate_at(self, i: int) -> "MQElement":
        """Image under the automorphism sqrt(m_{i+1}) -> -sqrt(m_{i+1})."""
        return MQElement(self.field, (-c if T >> i & 1 else c for T, c in enumerate(self.coeffs)))

    def __repr__(self):
        return f"MQElement({self.field.radicands}, {format_mq(self)!r})"

    def __str__(self):
        return format_mq(self)


def mq_mul(a: MQElement, b: MQElement) -> MQElement:
    if a.field is not b.field:
        raise FieldMismatchError(f"{a.field} vs {b.field}")
    f = a.field
    out = [Fraction(0)] * f.dim
    for S, x in enumerate(a.coeffs):
        if not x:
            continue
        for T, y in enumerate(b.coeffs):
            if y:
                out[S ^ T] += x * y * f.radicand(S & T)
    return MQElement(f, out)


def mq_inverse(a: MQElement) -> MQElement:
    """Exact inverse by successively multiplying with the conjugate at each radical."""
    if not a:
        raise ZeroDivisionError("zero has no inverse")
    num = a.field.one()
    x = a
    for i in range(a.field.k):
        c = x.conjugate_at(i)
        num = mq_mul(num, c)
        x = mq_mul(x, c)
    # x is now rational (fixed by every conjugation)
    return num / x.coeffs[0]


def mq_embed(a: MQElement, precision: int = 53):
    """Round a to `precision` bits: a float for precision 53, else an mpf.

    The working precision grows until two successive evaluations agree,
    which keeps the relative error below 2**(1 - precision) even under
    cancellation between radicals.
    """
    if not a:
        return 0.0 if precision == 53 else mpmath.mpf(0)
    wp = precision + 32
    prev = None
    while True:
        with mpmath.workprec(wp):
            v = mpmath.fsum(mpmath.mpf(c.numerator) / c.denominator * mpmath.sqrt(a.field.radicand(T))
                            for T, c in enumerate(a.coeffs) if c)
        if prev is not None and v != 0 and abs(v - prev) <= abs(v) * mpmath.mpf(2) ** (-precision - 4):
            break
        prev = v
        wp *= 2
        if wp > 1 << 16:
            raise ArithmeticError("precision escalation did not converge")
    if precision == 53:
        return float(v)
    with mpmath.workprec(precision):
        return +v


# -- text form: "1 + 3/2*sqrt(6) - sqrt(2)" ---------------------------------

_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:(?P<coef>\d+(?:/\d+)?)\s*(?P<star>\*)?\s*)?
        (?:sqrt\(\s*(?P<rad>\d+(?:/\d+)?)\s*\))?\s*""",
    re.VERBOSE,
)


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_mq(a: MQElement) -> str:
    parts = []
    for T, c in enumerate(a.coeffs):
        if not c:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if T == 0:
            body = format_rational(mag)
        elif mag == 1:
            body = f"sqrt({a.field.radicand(T)})"
        else:
            body = f"{format_rational(mag)}*sqrt({a.field.radicand(T)})"
        parts.append((sign, body))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def parse_mq(text: str, field: MQField) -> MQElement:
    text = text.strip()
    if not text:
        raise ValueError("empty number")
    pos = 0
    total = field.zero()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if m is None or m.end() == pos or (m.group("coef") is None and m.group("rad") is None):
            raise ValueError(f"cannot parse {text!r} at position {pos}")
        if m.group("star") and m.group("rad") is None:
            raise ValueError(f"dangling '*' in {text!r}")
        if pos > 0 and m.group("sign") is None:
            raise ValueError(f"missing operator in {text!r} at position {pos}")
        coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
        if m.group("sign") == "-":
            coef = -coef
        term = field.sqrt_of(Fraction(m.group("rad"))) * coef if m.group("rad") else field.rational(coef)
        total = total + term
        pos = m.end()
    return total
