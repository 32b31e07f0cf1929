import itertools
import re

import highspy
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pathlib import Path
from scipy.optimize import Bounds, LinearConstraint, milp

from iirforge.bounds import tighten_bounds
from iirforge.filterspec import builtin_benchmark
from iirforge.fixedpoint import CoefficientFormat, QuantizedFilter, integer_range
from iirforge.milp import (COEFFS, LinearModel, binary_expansion, build_design_model, check_solution,
                           complete_assignment, export_lp, lp_text, signed_product)
from iirforge.search import enumerate_feasible, make_problem, solve

GOLDEN = Path(__file__).parent / "golden"


def to_scipy(model: LinearModel):
    """Dense matrices for scipy.optimize.milp (independent of the LP writer)."""
    names = list(model.variables)
    idx = {n: i for i, n in enumerate(names)}
    A = np.zeros((len(model.constraints), len(names)))
    lo = np.full(len(model.constraints), -np.inf)
    hi = np.full(len(model.constraints), np.inf)
    for r, con in enumerate(model.constraints):
        for v, c in con.terms:
            A[r, idx[v]] = float(c)
        if con.rel in ("<=", "="):
            hi[r] = float(con.rhs)
        if con.rel in (">=", "="):
            lo[r] = float(con.rhs)
    vlo = np.array([float(model.variables[n].lower) for n in names])
    vhi = np.array([float(model.variables[n].upper) for n in names])
    integ = np.array([0 if model.variables[n].kind == "continuous" else 1 for n in names])
    return names, idx, LinearConstraint(A, lo, hi), vlo, vhi, integ


def product_model(bound=7):
    m = LinearModel("prod")
    m.add_var("x", "integer", -bound, bound)
    m.add_var("y", "integer", -bound, bound)
    z = signed_product(m, "x", "y")
    return m, z


@pytest.fixture(scope="module")
def prod():
    m, z = product_model()
    return m, z, to_scipy(m)


def z_range(prod, x, y):
    m, z, (names, idx, cons, vlo, vhi, integ) = prod
    lo, hi = vlo.copy(), vhi.copy()
    lo[idx["x"]] = hi[idx["x"]] = x
    lo[idx["y"]] = hi[idx["y"]] = y
    out = []
    for sgn in (1, -1):
        c = np.zeros(len(names))
        c[idx[z]] = sgn
        res = milp(c, constraints=cons, integrality=integ, bounds=Bounds(lo, hi))
        assert res.status == 0, (x, y, res.message)
        out.append(round(res.x[idx[z]]))
    return tuple(out)


@pytest.mark.parametrize("x", [-7, -3, 0, 5, 7])
def test_product_is_forced(prod, x):
    for y in (-7, -4, 0, 4, 7):
        assert z_range(prod, x, y) == (x * y, x * y)


def test_product_big_m_is_bound_product():
    m, z = product_model()
    assert m.max_big_m == 49
    assert any(b.value == 49 and "7 * 7" in b.derivation for b in m.big_m)


def test_product_completion_and_rejection():
    m, z = product_model()
    for x, y in itertools.product(range(-7, 8), repeat=2):
        a = complete_assignment(m, {"x": x, "y": y})
        assert a[z] == x * y
        assert check_solution(m, a) == (True, None)
    a = complete_assignment(m, {"x": -3, "y": 4})
    a[z] = -11
    ok, name = check_solution(m, a)
    assert not ok and name is not None


def test_square_has_no_sign():
    m = LinearModel()
    m.add_var("x", "integer", -5, 5)
    z = signed_product(m, "x", "x")
    for x in range(-5, 6):
        a = complete_assignment(m, {"x": x})
        assert a[z] == x * x and check_solution(m, a)[0]


def test_binary_expansion():
    m = LinearModel()
    m.add_var("x", "integer", 0, 7)
    bits = binary_expansion(m, "x")
    assert len(bits) == 5  # i = 0 .. ceil(log2 7) + 1
    a = complete_assignment(m, {"x": 5})
    assert [a[b] for b in bits] == [1, 0, 1, 0, 0]
    good = {"x": 6, **{b: v for b, v in zip(bits, [0, 1, 1, 0, 0])}}
    bad = {"x": 6, **{b: v for b, v in zip(bits, [1, 1, 1, 0, 0])}}
    assert check_solution(m, good) == (True, None)
    assert check_solution(m, bad) == (False, "bin_x")
    m1 = LinearModel()
    m1.add_var("y", "integer", 0, 1)
    (t0, *_) = binary_expansion(m1, "y")
    assert complete_assignment(m1, {"y": 1})[t0] == 1


def test_expansion_needs_bounds():
    m = LinearModel()
    m.add_var("x", "integer", 0)
    with pytest.raises(ValueError):
        binary_expansion(m, "x")


def test_check_solution_edge_cases():
    assert check_solution(LinearModel(), {}) == (True, None)
    m = LinearModel()
    m.add_var("x", "integer", 0, 3)
    with pytest.raises(KeyError):
        check_solution(m, {})
    assert check_solution(m, {"x": 4}) == (False, "bound:x")
    assert check_solution(m, {"x": 0.5}) == (False, "integrality:x")


def test_golden_one_variable_model():
    m = LinearModel()
    m.add_var("x", "integer", 0)
    m.add_constraint("c0", {"x": 1}, ">=", 3)
    m.set_objective("min", {"x": 1})
    assert lp_text(m) == (GOLDEN / "one_var.lp").read_text()


@pytest.fixture(scope="module")
def lp10():
    return make_problem(builtin_benchmark("lp1_0"), 4)


def test_engine_optimum_satisfies_model(lp10):
    q = solve(lp10).filter
    m = build_design_model(lp10, g_a=q.fmt_a.g, g_b=q.fmt_b.g)
    assert check_solution(m, complete_assignment(m, q)) == (True, None)


def violated(m, a):
    out = []
    for con in m.constraints:
        lhs = sum(c * a[v] for v, c in con.terms)
        if not {"<=": lhs <= con.rhs, ">=": lhs >= con.rhs, "=": lhs == con.rhs}[con.rel]:
            out.append(con.name)
    return out


def test_unstable_assignment_rejected(lp10):
    m = build_design_model(lp10, g_a=1, g_b=0)
    # S = 4: a2 = 3 is fine but a1 + a2 > S - 1 places a pole outside the circle
    a = complete_assignment(m, dict(zip(COEFFS, (-6, 2, 1, 1, 1))))
    assert check_solution(m, a)[0] is False
    assert any(n.startswith("stab") for n in violated(m, a))
    a = complete_assignment(m, dict(zip(COEFFS, (-4, 1, 1, 1, 1))))
    assert not any(n.startswith("stab") for n in violated(m, a))


def test_violated_big_m_link_named(lp10):
    m = build_design_model(lp10, g_a=0, g_b=0)
    a = complete_assignment(m, dict(zip(COEFFS, (-6, 3, 2, 2, 1))))
    a["zeta_b2"] = 1  # claims b2 = 0
    ok, name = check_solution(m, a)
    assert not ok and name.startswith("zeta_b2")


def test_paper_lp14_assignment_accepted():
    p = make_problem(builtin_benchmark("lp1_4"), 7)
    q = QuantizedFilter(-40, 20, 25, 40, 25, CoefficientFormat(7, 0), CoefficientFormat(7, -1))
    m = build_design_model(p, g_a=0, g_b=-1)
    assert check_solution(m, complete_assignment(m, q)) == (True, None)


def test_lp_names_are_valid(lp10):
    text = lp_text(build_design_model(lp10, mode="max_zeros"))
    for line in text.splitlines():
        if line.startswith(" ") and ":" in line:
            name = line.split(":")[0].strip()
            assert re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]{0,254}", name)
    assert text.isascii()


def test_export_is_deterministic(lp10, tmp_path):
    a = export_lp(build_design_model(lp10), tmp_path / "a.lp")
    b = export_lp(build_design_model(lp10), tmp_path / "b.lp")
    assert a == b == (tmp_path / "a.lp").read_text()


def test_export_refuses_huge_big_m():
    p = make_problem(builtin_benchmark("lp1_0"), 14, points_per_band=10)
    with pytest.raises(ValueError, match="2\\^24"):
        lp_text(build_design_model(p))


def test_bad_mode():
    with pytest.raises(ValueError):
        build_design_model(make_problem(builtin_benchmark("lp4"), 4), mode="min_b3")


def highs_solve(path):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    return h


@pytest.mark.parametrize("k", [0, 1])
def test_highs_max_b_matches_tightened_box(tmp_path, k):
    lp10 = make_problem(builtin_benchmark("lp1_0"), 4, points_per_band=40)
    boxes = tighten_bounds(lp10)
    for g_b, box in boxes.items():
        best = None
        for g_a in range(lp10.g_a_range[0], lp10.g_a_range[1] + 1):
            path = tmp_path / f"m_{g_a}_{g_b}.lp"
            export_lp(build_design_model(lp10, mode=f"max_b{k}", g_a=g_a, g_b=g_b), path)
            h = highs_solve(path)
            if h.getModelStatus() == highspy.HighsModelStatus.kOptimal:
                v = round(h.getInfo().objective_function_value)
                best = v if best is None else max(best, v)
        assert best == box[k][1]


def test_highs_feasibility_model_parses(lp10, tmp_path):
    path = tmp_path / "f.lp"
    export_lp(build_design_model(lp10, g_a=0, g_b=0), path)
    h = highs_solve(path)
    assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal


@settings(max_examples=40, deadline=None)
@given(st.integers(-7, 7), st.integers(-7, 7), st.integers(-8, 7), st.integers(-8, 7), st.integers(-8, 7))
def test_model_agrees_with_exact_grid_check(a1, a2, b0, b1, b2):
    p = make_problem(builtin_benchmark("lp4"), 4, points_per_band=20)
    from iirforge.response import check_grid, stable_integer
    q = QuantizedFilter(a1, a2, b0, b1, b2, CoefficientFormat(4, 1), CoefficientFormat(4, 1))
    m = build_design_model(p, g_a=1, g_b=1, boxes=((-8, 7),) * 3)
    ok, _ = check_solution(m, complete_assignment(m, q))
    expect = stable_integer(a1, a2, 4, 1) and check_grid(q, p.grid) is None and b0 >= abs(b2)
    assert ok == expect


def projection(p):
    feas = set()
    for g_a in range(p.g_a_range[0], p.g_a_range[1] + 1):
        for g_b in range(p.g_b_range[0], p.g_b_range[1] + 1):
            m = build_design_model(p, g_a=g_a, g_b=g_b)
            rng = [range(*integer_range(CoefficientFormat(p.w, g_a)))] * 2
            rng = [range(r.start, r.stop + 1) for r in rng]
            rng += [range(int(m.variables[v].lower), int(m.variables[v].upper) + 1) for v in COEFFS[2:]]
            pts = np.array(list(itertools.product(*rng)), dtype=np.int64)
            a = complete_assignment(m, {v: pts[:, i] for i, v in enumerate(COEFFS)})
            for row in pts[m.batch_check(a)]:
                feas.add((g_a, g_b) + tuple(int(x) for x in row))
    return feas


@pytest.mark.parametrize("name", ["lp1_0", "lp4"])
def test_projection_equals_engine_small_grid(name):
    p = make_problem(builtin_benchmark(name), 4, points_per_band=20)
    engine = {(q.fmt_a.g, q.fmt_b.g) + q.a_int + q.b_int for q in enumerate_feasible(p)}
    assert projection(p) == engine
