from fractions import Fraction

import pytest
from hypothesis import given

from symkit.field import GaussRat, DivisionByZero, I, ONE, ZERO

from .strategies import gauss_rats, gauss_rats_nonzero


def g(re, im=0):
    return GaussRat(Fraction(re), Fraction(im))


def test_norm_of_one_plus_i():
    assert (ONE + I) * (ONE - I) == g(2)


def test_additive_identity():
    x = g(Fraction(7, 3), Fraction(-2, 5))
    assert ZERO + x == x


def test_rational_product():
    assert g(Fraction(1, 2)) * g(Fraction(2, 3)) == g(Fraction(1, 3))


def test_inverse_of_i():
    assert I.inv() == -I


def test_inverse_of_two():
    assert g(2).inv() == g(Fraction(1, 2))


def test_inverse_of_one_plus_i():
    assert (ONE + I).inv() == g(Fraction(1, 2), Fraction(-1, 2))


def test_inverse_of_zero_raises():
    with pytest.raises(DivisionByZero):
        ZERO.inv()


def test_division():
    assert (ONE + I) / (ONE - I) == I


def test_pow():
    assert I ** 2 == g(-1)
    assert (ONE + I) ** 0 == ONE


@pytest.mark.parametrize(
    "value,text",
    [
        (ZERO, "0"),
        (g(Fraction(3, 2)), "3/2"),
        (g(-3), "-3"),
        (I, "i"),
        (-I, "-i"),
        (g(0, Fraction(1, 2)), "1/2*i"),
        (g(Fraction(3, 2), Fraction(1, 2)), "3/2 + 1/2*i"),
        (g(Fraction(3, 2), Fraction(-1, 2)), "3/2 - 1/2*i"),
        (g(0, -2), "-2*i"),
    ],
)
def test_rendering(value, text):
    assert str(value) == text
    assert GaussRat.parse(text) == value


@given(gauss_rats())
def test_text_round_trip(x):
    assert GaussRat.parse(str(x)) == x


@given(gauss_rats(), gauss_rats())
def test_canonical_commutativity(a, b):
    left = a + b
    right = b + a
    assert left == right
    # canonical form: both orders produce the same rendering, bit for bit
    assert str(left) == str(right)


@given(gauss_rats(), gauss_rats(), gauss_rats())
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + (-a) == ZERO
    assert a * ONE == a


@given(gauss_rats_nonzero())
def test_multiplicative_inverse(a):
    assert a * a.inv() == ONE


def test_parse_rejects_garbage():
    for bad in ("", "1 +", "x", "2i", "--", "1 2"):
        with pytest.raises(ValueError):
            GaussRat.parse(bad)
