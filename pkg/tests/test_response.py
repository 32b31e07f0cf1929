import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iirforge.filterspec import BandSpec, Bound, FrequencySpec, builtin_benchmark, discretize
from iirforge.fixedpoint import CoefficientFormat, QuantizedFilter
from iirforge.response import (Counterexample, Verified, check_grid, is_stable, mag2_den, mag2_num,
                               response_csv, satisfies_grid, stable_integer, verify_spec)

F = Fraction
LP14 = QuantizedFilter(-40, 20, 25, 40, 25, CoefficientFormat(7, 0), CoefficientFormat(7, -1))
HP0 = QuantizedFilter(-31, 0, 4, -4, 0, CoefficientFormat(6, 0), CoefficientFormat(6, 3))


def direct_mag2(coeffs, omega):
    """|sum c_k e^{-j k pi omega}|^2 by complex evaluation."""
    z = cmath.exp(-1j * math.pi * omega)
    return abs(sum(c * z ** k for k, c in enumerate(coeffs))) ** 2


def test_hp0_filter_is_the_published_one():
    assert HP0.b == (1, -1, 0)
    assert HP0.a == (F(-31, 32), 0)
    assert LP14.a == (F(-5, 8), F(5, 16))


def test_mag2_examples():
    assert mag2_num(F(25, 128), F(40, 128), F(25, 128), F(0)) == F(90, 128) ** 2
    assert mag2_num(1, -1, 0, F(1)) == 4
    assert mag2_den(F(-5, 8), F(5, 16), F(1)) == F(3.75390625)
    assert all(mag2_den(0, 0, F(k, 7)) == 1 for k in range(8))


@settings(max_examples=200)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1))
def test_mag2_matches_complex_evaluation(b0, b1, b2, w):
    assert mag2_num(b0, b1, b2, w) == pytest.approx(direct_mag2((b0, b1, b2), w), abs=1e-9)


@settings(max_examples=300)
@given(st.floats(-1.999, 1.999), st.floats(-0.999, 0.999), st.floats(0, 1))
def test_stable_denominator_bounded_by_16(a1, a2, w):
    if is_stable(a1, a2):
        assert mag2_den(a1, a2, w) <= 16


def test_stability_triangle():
    assert is_stable(0, 0)
    assert is_stable(F(-5, 8), F(5, 16))
    assert not is_stable(1, 0)
    assert not is_stable(0, 1)


@given(st.integers(2, 9), st.integers(-2, 1), st.data())
def test_integer_stability_agrees_with_real(w, g, data):
    f = CoefficientFormat(w, g)
    lo, hi = f.integer_range()
    a1 = data.draw(st.integers(lo, hi))
    a2 = data.draw(st.integers(lo, hi))
    assert stable_integer(a1, a2, w, g) == is_stable(f.to_real(a1), f.to_real(a2))


def test_paper_designs_pass_their_grids():
    assert satisfies_grid(LP14, discretize(builtin_benchmark("lp1_4"), 300))
    assert satisfies_grid(HP0, discretize(builtin_benchmark("hp0"), 300))


def test_scaled_numerator_violates_passband_upper():
    # lp1_0 optimum (a = (-3/4, 3/8), b = (1/4, 1/4, 1/8)) with b scaled by 4
    big = QuantizedFilter(-24, 12, 16, 16, 8, CoefficientFormat(6, 0), CoefficientFormat(6, 1))
    v = check_grid(big, discretize(builtin_benchmark("lp1_0"), 50))
    assert v is not None and v.side == "upper" and v.omega <= F(3, 10)


def test_unstable_rejected():
    f = CoefficientFormat(4, 1)
    with pytest.raises(ValueError):
        check_grid(QuantizedFilter(0, 4, 1, 0, 0, f, f), discretize(builtin_benchmark("lp4"), 10))


def test_constant_ratio_verified():
    # B = 0.5 A, bounds [0.4, 0.6] on the whole axis
    f = CoefficientFormat(5, 0)
    q = QuantizedFilter(-8, 4, 8, -4, 2, f, f)
    spec = FrequencySpec("flat", (BandSpec(F(0), F(1), Bound.constant(F(2, 5)), Bound.constant(F(3, 5))),))
    for step in (1e-2, 1e-4):
        assert isinstance(verify_spec(q, spec, step), Verified)


def test_paper_lp14_verified_on_continuous_bands():
    assert isinstance(verify_spec(LP14, builtin_benchmark("lp1_4"), 1e-4), Verified)


def test_flat_gain_violates_passband_lower():
    f = CoefficientFormat(4, 0)
    q = QuantizedFilter(0, 0, 2, 0, 0, f, CoefficientFormat(4, -2))  # |H| = 1/16
    res = verify_spec(q, builtin_benchmark("lp1_0"))
    assert isinstance(res, Counterexample) and res.violated and res.side == "lower"
    assert res.omega <= F(3, 10)


def test_response_csv_columns():
    text = response_csv(LP14, builtin_benchmark("lp1_4"), n=11)
    rows = [r.split(",") for r in text.strip().splitlines()]
    assert rows[0] == ["omega", "magnitude", "beta_lo", "beta_hi"]
    assert len(rows) == 12
    mid = [r for r in rows[1:] if r[0] == "0.500000"][0]
    assert mid[2] == "" and mid[3] == ""
    assert float(rows[1][1]) == pytest.approx(math.sqrt(direct_mag2((25 / 128, 40 / 128, 25 / 128), 0)
                                                        / direct_mag2((1, -0.625, 0.3125), 0)))
