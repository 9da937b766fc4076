import math
from fractions import Fraction

import pytest

from csrk.exact import Scalar, as_scalar


def test_construction_and_rational_part():
    assert Scalar(3).as_fraction() == 3
    assert Scalar(Fraction(2, 4)).as_fraction() == Fraction(1, 2)
    assert Scalar(0) == 0
    assert not Scalar(0)
    assert Scalar("−".replace("−", "-") + "2/3").as_fraction() == Fraction(-2, 3)


def test_sqrt_reduces_to_square_free():
    assert Scalar.sqrt(12) == 2 * Scalar.sqrt(3)
    assert Scalar.sqrt(9) == 3
    assert Scalar.sqrt(1) == 1
    assert Scalar.sqrt(49, Fraction(1, 7)) == 1
    assert Scalar.sqrt(8) == 2 * Scalar.sqrt(2)


def test_field_arithmetic_closure():
    a = Scalar(Fraction(1, 2)) + Scalar.sqrt(3, Fraction(1, 6))
    b = Scalar.sqrt(5) - 2
    prod = a * b
    # (1/2 + sqrt3/6)(sqrt5 - 2) = sqrt5/2 + sqrt15/6 - 1 - sqrt3/3
    expected = (
        Scalar.sqrt(5, Fraction(1, 2))
        + Scalar.sqrt(15, Fraction(1, 6))
        - 1
        - Scalar.sqrt(3, Fraction(1, 3))
    )
    assert prod == expected
    assert a - a == 0
    assert (a + b) - b == a


def test_sqrt_products_recombine():
    assert Scalar.sqrt(3) * Scalar.sqrt(3) == 3
    assert Scalar.sqrt(3) * Scalar.sqrt(15) == 3 * Scalar.sqrt(5)
    assert Scalar.sqrt(6) * Scalar.sqrt(10) == 2 * Scalar.sqrt(15)


def test_division_by_single_term():
    one = Scalar(1)
    third = one / Scalar.sqrt(3)
    assert third * Scalar.sqrt(3) == 1
    assert third == Scalar.sqrt(3, Fraction(1, 3))
    x = Scalar(Fraction(5, 7)) + Scalar.sqrt(11, 2)
    assert (x / Scalar.sqrt(7, Fraction(3, 2))) * Scalar.sqrt(7, Fraction(3, 2)) == x
    with pytest.raises(ZeroDivisionError):
        one / Scalar(0)


def test_division_by_sum_is_rejected():
    with pytest.raises(ValueError):
        Scalar(1) / (Scalar(1) + Scalar.sqrt(2))


def test_float_conversion_matches_correct_rounding():
    cases = {
        Scalar.sqrt(3): math.sqrt(3),
        Scalar(Fraction(1, 3)): 1 / 3,
        Scalar.sqrt(3, Fraction(1, 6)): math.sqrt(3) / 6,
        Scalar(10**6) + Scalar.sqrt(2): 10**6 + math.sqrt(2),
    }
    for scalar, ref in cases.items():
        assert float(scalar) == pytest.approx(ref, abs=0, rel=1e-15)
    # cancellation-heavy value stays accurate
    tiny = (Scalar.sqrt(2) - 1) ** 8
    assert float(tiny) == pytest.approx((math.sqrt(2) - 1) ** 8, rel=1e-13)


def test_sign_abs_and_ordering():
    s = Scalar.sqrt(2) - Scalar(Fraction(3, 2))
    assert s.sign() == -1
    assert abs(s) == Scalar(Fraction(3, 2)) - Scalar.sqrt(2)
    assert Scalar(0).sign() == 0
    assert Scalar.sqrt(2) < Scalar.sqrt(3)
    assert Scalar(1) <= Scalar(1)
    vals = [Scalar(1), Scalar.sqrt(2), Scalar(Fraction(5, 4))]
    assert max(vals) == Scalar.sqrt(2)


def test_string_round_trip():
    values = [
        Scalar(0),
        Scalar(Fraction(-7, 3)),
        Scalar(Fraction(1, 2)) + Scalar.sqrt(3, Fraction(-1, 6)),
        Scalar.sqrt(15, Fraction(1, 30)) + Scalar.sqrt(35, Fraction(2, 7)) - 4,
    ]
    for v in values:
        assert Scalar.from_string(str(v)) == v
    assert str(Scalar(Fraction(1, 2))) == "1/2"
    assert Scalar.from_string("sqrt(3)") == Scalar.sqrt(3)
    assert Scalar.from_string("-sqrt(3)") == -Scalar.sqrt(3)
    assert Scalar.from_string("1/2+-1/6*sqrt(3)") == Scalar(Fraction(1, 2)) - Scalar.sqrt(3, Fraction(1, 6))


def test_floats_are_rejected():
    with pytest.raises(TypeError):
        Scalar(0.5)
    with pytest.raises(TypeError):
        Scalar(1) + 0.5


def test_as_scalar_coercions():
    assert as_scalar("1/2") == Scalar(Fraction(1, 2))
    assert as_scalar(Fraction(3, 4)) == Scalar(Fraction(3, 4))
    s = Scalar.sqrt(7)
    assert as_scalar(s) is s
