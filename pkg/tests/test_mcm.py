import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from iirforge.mcm import (ZERO, AdderGraph, adder_count, adder_lower_bound, csd_digits, csd_weight,
                          mcm_cost, odd_fundamental, solve_mcm, to_dot)


@pytest.mark.parametrize("c, f", [(40, (5, 3, 1)), (-25, (25, 0, -1)), (1, (1, 0, 1)), (-64, (1, 6, -1))])
def test_odd_fundamental(c, f):
    assert tuple(odd_fundamental(c)) == f


def test_zero_fundamental():
    assert odd_fundamental(0) == ZERO


@given(st.integers(-(1 << 20), 1 << 20))
def test_csd_is_canonical_and_minimal(c):
    d = csd_digits(c)
    assert sum(x << i for i, x in enumerate(d)) == c
    assert all(d[i] == 0 or d[i + 1] == 0 for i in range(len(d) - 1))


@pytest.mark.parametrize("c", [45, 7, 11, 23, 171, 341, 255, 1001])
def test_csd_weight_matches_exhaustive_signed_digits(c):
    assert csd_weight(c) == oracles.min_signed_digits(c)


def test_lower_bound_examples():
    assert adder_lower_bound([]) == 0
    assert adder_lower_bound([1]) == 0
    assert adder_lower_bound([5, 25]) == 2
    assert adder_lower_bound([45]) == 2


def check_graph(g: AdderGraph, targets):
    vals, tmap = oracles.eval_graph(g.to_dict())
    assert [n.value for n in g.nodes] == vals
    for t in targets:
        assert tmap[t] == t


def test_trivial_targets_need_no_adders():
    g = solve_mcm([1, 8, -4])
    assert adder_count(g) == 0
    check_graph(g, [1, 8, -4])


def test_lp14_numerator_block():
    g = solve_mcm([25, 40, 25])
    assert adder_count(g) == 2
    assert sorted(n.value for n in g.nodes) == [5, 25]
    check_graph(g, [25, 40])


def test_published_denominators():
    assert adder_count(solve_mcm([-40, 20])) == 1
    g = solve_mcm([-31, 0])
    assert adder_count(g) == 1
    check_graph(g, [-31, 0])


def test_45_needs_two():
    g = solve_mcm([45])
    assert adder_count(g) == 2
    check_graph(g, [45])
    # no single adder on the input reaches 45
    assert 45 not in oracles.one_adder(1, 1, 1 << 8)


def test_cap_and_limits():
    assert solve_mcm([683], cap=3) is None
    assert mcm_cost([683], cap=3) is None
    assert mcm_cost([683]) == 4
    with pytest.raises(ValueError):
        solve_mcm([1 << 25])
    with pytest.raises(ValueError):
        solve_mcm([3], cap=-1)


def test_roundtrip_and_dot():
    g = solve_mcm([25, 40, 25])
    assert AdderGraph.from_dict(g.to_dict()) == g
    dot = to_dot({"b": g})
    assert dot.startswith("digraph") and dot.count('label="') >= 2
    adders = [ln for ln in dot.splitlines() if "_n" in ln and "[label=" in ln and "->" not in ln]
    assert len(adders) == adder_count(g)


def test_tampered_graph_rejected():
    d = solve_mcm([45]).to_dict()
    d["nodes"][0][0] += 2
    with pytest.raises(ValueError):
        AdderGraph.from_dict(d)


@pytest.fixture(scope="module")
def small_costs():
    return oracles.single_costs(511, 1 << 11)


def test_single_constants_against_bfs(small_costs):
    for t, c in small_costs.items():
        assert mcm_cost([t]) == c, t


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(-4095, 4095), min_size=1, max_size=4))
def test_graphs_realize_their_targets(ts):
    g = solve_mcm(ts)
    assert g is not None
    check_graph(g, ts)
    funds = {odd_fundamental(t).odd for t in ts if t}
    assert adder_count(g) >= adder_lower_bound(funds)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-2047, 2047), min_size=1, max_size=3), st.integers(0, 4))
def test_cost_invariant_under_shift_and_sign(ts, k):
    moved = [(-t) << k for t in ts]
    assert mcm_cost(ts) == mcm_cost(moved) == mcm_cost(ts + [ts[0]])
