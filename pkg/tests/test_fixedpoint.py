from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from iirforge.fixedpoint import CoefficientFormat, QuantizedFilter, integer_range, msb_for_bound


def test_scale_examples():
    assert CoefficientFormat(5, 0).to_real(12) == Fraction(3, 4)
    # the published lp1_4 and hp0 denominators sit at g_a = 0
    assert CoefficientFormat(7, 0).to_real(-40) == Fraction(-5, 8)
    assert CoefficientFormat(6, 0).to_real(-31) == Fraction(-31, 32)
    assert CoefficientFormat(4, 1).to_real(7) == Fraction(7, 4)


@pytest.mark.parametrize("w, rng", [(4, (-8, 7)), (5, (-16, 15)), (10, (-512, 511))])
def test_integer_range(w, rng):
    assert integer_range(CoefficientFormat(w, 0)) == rng


@pytest.mark.parametrize("x, g", [(1.9999, 1), (2.0, 1), (0.75, 0), (0.5, -1), (2.0001, 2)])
def test_msb_for_bound(x, g):
    assert msb_for_bound(x) == g


def test_msb_for_bound_rejects_nonpositive():
    with pytest.raises(ValueError):
        msb_for_bound(0.0)


def test_from_real_rejects_unrepresentable():
    f = CoefficientFormat(4, 0)
    assert f.from_real(Fraction(-1)) == -8
    with pytest.raises(ValueError):
        f.from_real(Fraction(1))
    with pytest.raises(ValueError):
        f.from_real(Fraction(1, 16))


def test_filter_roundtrip():
    q = QuantizedFilter.from_reals([Fraction(-5, 8), Fraction(5, 16)],
                                   [Fraction(25, 128), Fraction(40, 128), Fraction(25, 128)], 7, 0, -1)
    assert q.a_int == (-40, 20)
    assert q.b_int == (25, 40, 25)
    assert QuantizedFilter.from_dict(q.to_dict()) == q
    assert q.nonzeros() == 5


def test_filter_checks_ranges():
    f4 = CoefficientFormat(4, 0)
    with pytest.raises(ValueError):
        QuantizedFilter(8, 0, 0, 0, 0, f4, f4)
    with pytest.raises(ValueError):
        QuantizedFilter(0, 0, 0, 0, 0, f4, CoefficientFormat(5, 0))


@given(st.integers(2, 16), st.integers(-8, 4), st.data())
def test_codes_roundtrip(w, g, data):
    f = CoefficientFormat(w, g)
    lo, hi = f.integer_range()
    c = data.draw(st.integers(lo, hi))
    x = f.to_real(c)
    assert f.from_real(x) == c
    assert -(2 ** g) <= x < 2 ** g


@given(st.integers(2, 12), st.integers(-4, 2))
def test_wider_word_contains_narrower(w, g):
    # every value at (w, g) stays representable at (w + 1, g): monotone design space
    small, big = CoefficientFormat(w, g), CoefficientFormat(w + 1, g)
    lo, hi = small.integer_range()
    for c in (lo, hi, 0):
        assert big.from_real(small.to_real(c)) == 2 * c
