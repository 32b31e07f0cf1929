import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iirforge.bounds import a_bounds, b_bounds, q_matrix, stable_pairs, tighten_bounds
from iirforge.filterspec import BandSpec, Bound, FrequencySpec, builtin_benchmark, discretize
from iirforge.fixedpoint import CoefficientFormat
from iirforge.response import is_stable
from iirforge.search import make_problem, solve


def test_a_bounds():
    assert a_bounds() == {"a1": (-2, 2), "a2": (-1, 1), "g_a": 1}


def test_stable_pairs_w4():
    pairs = stable_pairs(4, 1)
    # |a1'| <= 7 alone, but a2' > |a1'| - 4 together with a2' <= 3 caps pairs at |a1'| <= 6
    assert np.abs(pairs[:, 0]).max() == 6
    assert pairs[:, 1].max() == 3
    f = CoefficientFormat(4, 1)
    brute = {(a1, a2) for a1 in range(-8, 8) for a2 in range(-8, 8)
             if is_stable(f.to_real(a1), f.to_real(a2))}
    assert {tuple(p) for p in pairs.tolist()} == brute


@pytest.mark.parametrize("omega, eig", [(0.0, [0, 0, 3]), (0.5, [0, 1, 2])])
def test_q_matrix_spectrum(omega, eig):
    assert np.linalg.eigvalsh(q_matrix(omega)) == pytest.approx(eig, abs=1e-12)


@given(st.floats(0, 1))
def test_q_matrix_psd_and_spectrum(omega):
    ev = np.sort(np.linalg.eigvalsh(q_matrix(omega)))
    c2 = math.cos(2 * math.pi * omega)
    assert ev[0] >= -1e-12
    assert ev == pytest.approx(sorted([0, 1 - c2, 2 + c2]), abs=1e-9)


@given(st.floats(0, 1), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_q_matrix_is_the_magnitude_form(omega, b):
    b = np.array(b)
    direct = abs(np.polyval(b[::-1], np.exp(-1j * math.pi * omega))) ** 2
    assert b @ q_matrix(omega) @ b == pytest.approx(direct, abs=1e-9)


def test_zero_upper_bound_gives_zero_box():
    spec = FrequencySpec("null", (BandSpec(0, 1, Bound.constant(0), Bound.constant(0)),))
    assert b_bounds(spec, discretize(spec, 20)).bound == (0.0, 0.0, 0.0)


def test_box_is_persymmetric():
    for name in ("lp1_0", "lp3_2", "lp4", "hp0"):
        s = builtin_benchmark(name)
        box = b_bounds(s, discretize(s, 300))
        assert box.bound[0] == box.bound[2]


def lattice_max(spec, grid, step, extent):
    """Largest |b_k| over a lattice point satisfying b^T Q b <= 16 beta_hi^2 at every grid point."""
    axes = [np.arange(-e, e + step / 2, step) for e in extent]
    B = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    # tightest constraints first so the survivor set shrinks quickly
    for p in sorted(grid.points, key=lambda p: p.beta_hi_sq):
        om = float(p.omega)
        c1, c2 = math.cos(math.pi * om), math.cos(2 * math.pi * om)
        val = (B ** 2).sum(1) + 2 * (B[:, 0] * B[:, 1] + B[:, 1] * B[:, 2]) * c1 + 2 * B[:, 0] * B[:, 2] * c2
        B = B[val <= 16 * float(p.beta_hi_sq)]
    return np.abs(B).max(0)


def test_box_dominates_lattice_oracle():
    spec = builtin_benchmark("lp1_0")
    grid = discretize(spec, 300)
    box = b_bounds(spec, grid)
    # a lattice well past the box: anything feasible outside it would show up here
    seen = lattice_max(spec, grid, 0.02, [b * 1.3 for b in box.bound])
    assert np.all(np.array(box.bound) >= seen)


def test_tighten_reports_infeasible():
    assert tighten_bounds(make_problem(builtin_benchmark("lp1_4"), 4)) is None


def test_tightened_box_inside_initial_and_holds_optimum():
    p = make_problem(builtin_benchmark("lp4"), 4)
    boxes = tighten_bounds(p)
    assert boxes
    for g_b, box in boxes.items():
        for (lo, hi), (ilo, ihi) in zip(box, p.integer_box(g_b)):
            assert ilo <= lo <= hi <= ihi
    res = solve(p)
    q = res.filter
    box = boxes[q.fmt_b.g]
    assert all(lo <= v <= hi for v, (lo, hi) in zip(q.b_int, box))
