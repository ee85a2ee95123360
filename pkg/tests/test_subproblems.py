import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import capped_rs_brute, capped_selection_brute, capped_sp_brute, lp_by_vertices
from rtst.deterministic import solve_p, two_stage
from rtst.errors import InfeasibleError, ValidationError
from rtst.model import Instance, RepSelection, Selection, ShortestPath, random_dag, random_structure
from rtst.subproblems import (
    CappedSubproblem,
    capped_rs_greedy,
    capped_selection_dp,
    capped_sp_multigraph,
    grid_units,
    min_cost_unit_flow,
)
from rtst.uncertainty import VPolytope

seeds = st.integers(0, 2**32 - 1)
EPSILONS = (1.0, 0.5, 0.25)


def _costs(rng, n):
    return np.round(rng.uniform(0, 10, size=n), 1), np.round(rng.uniform(0, 10, size=n), 1)


def _grid_caps(rng, n, eps):
    units = round(1 / eps)
    return rng.integers(0, units + 1, size=n) / units


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from(EPSILONS))
def test_selection_dp_matches_grid_enumeration(seed, eps):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    sel = random_structure(rng, "selection", n)
    C, c = _costs(rng, n)
    d = _grid_caps(rng, n, eps)
    want = capped_selection_brute(C, c, d, sel.p, eps)
    sub = CappedSubproblem(sel, C, c, d)
    if not np.isfinite(want):
        with pytest.raises(InfeasibleError):
            capped_selection_dp(sub, eps)
        return
    sol = capped_selection_dp(sub, eps)
    assert sol.value == pytest.approx(want, abs=1e-9)
    # solution is on the grid, within caps and selects exactly p units of mass
    assert sol.value == pytest.approx(C @ sol.x + c @ sol.y)
    assert (sol.x + sol.y).sum() == pytest.approx(sel.p)
    assert np.all(sol.y <= d + 1e-12)
    assert np.allclose(sol.y / eps, np.round(sol.y / eps))
    assert np.all(sol.x * sol.y == 0)


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from(EPSILONS))
def test_rs_greedy_matches_grid_enumeration(seed, eps):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    rs = random_structure(rng, "rep_selection", n)
    C, c = _costs(rng, n)
    d = _grid_caps(rng, n, eps)
    sol = capped_rs_greedy(CappedSubproblem(rs, C, c, d))
    assert sol.value == pytest.approx(capped_rs_brute(C, c, d, rs.partition, eps), abs=1e-9)
    for blk in rs.partition:
        assert (sol.x[list(blk)] + sol.y[list(blk)]).sum() == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(EPSILONS))
def test_sp_multigraph_matches_enumeration(seed, eps):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    sp = random_dag(rng, n)
    C, c = _costs(rng, n)
    d = _grid_caps(rng, n, eps)
    sol = capped_sp_multigraph(CappedSubproblem(sp, C, c, d))
    assert sol.value == pytest.approx(capped_sp_brute(sp.nodes, sp.arcs, sp.s, sp.t, C, c, d), abs=1e-7)
    assert np.all(sol.y <= d + 1e-9)


def test_selection_without_caps_buys_the_cheapest_now():
    sel = Selection(2)
    C = np.array([4.0, 1.0, 3.0, 2.0])
    sol = capped_selection_dp(CappedSubproblem(sel, C, np.zeros(4), np.zeros(4)), 0.5)
    assert sol.value == 3.0
    assert sol.x.tolist() == [0.0, 1.0, 0.0, 1.0]


def test_selection_with_full_caps_and_cheap_recourse():
    sol = capped_selection_dp(CappedSubproblem(Selection(2), np.full(3, 9.0), np.array([3.0, 1.0, 2.0]), np.ones(3)), 1.0)
    assert sol.value == 3.0
    assert sol.y.tolist() == [0.0, 1.0, 1.0]


def test_unreachable_selection_is_infeasible():
    sub = CappedSubproblem(Selection(3), np.zeros(3), np.zeros(3), np.zeros(3))
    assert capped_selection_dp(sub, 1.0).value == 0.0
    with pytest.raises(InfeasibleError):
        capped_selection_dp(CappedSubproblem(Selection(5), np.zeros(4), np.zeros(4), np.zeros(4)), 1.0)


def test_rs_greedy_edge_cases():
    rs = RepSelection(((0, 1), (2,)))
    C = np.array([3.0, 2.0, 5.0])
    sol = capped_rs_greedy(CappedSubproblem(rs, C, np.zeros(3), np.zeros(3)))
    assert sol.value == 7.0 and sol.x.tolist() == [0.0, 1.0, 1.0]
    one = capped_rs_greedy(CappedSubproblem(RepSelection(((0,),)), np.array([4.0]), np.array([1.0]), np.ones(1)))
    assert one.y.tolist() == [1.0] and one.value == 1.0


def test_grid_and_cap_validation():
    assert grid_units(0.25) == 4
    with pytest.raises(ValidationError):
        grid_units(0.3)
    with pytest.raises(ValidationError):
        CappedSubproblem(Selection(1), np.zeros(1), np.zeros(1), np.array([1.5]))
    with pytest.raises(ValidationError):
        capped_selection_dp(CappedSubproblem(Selection(1), np.zeros(2), np.zeros(2), np.array([0.3, 0.0])), 0.5)


def test_sp_without_caps_is_a_first_stage_shortest_path():
    rng = np.random.default_rng(5)
    for _ in range(10):
        sp = random_dag(rng, int(rng.integers(2, 9)))
        C, c = _costs(rng, len(sp.arcs))
        sol = capped_sp_multigraph(CappedSubproblem(sp, C, c, np.zeros(len(sp.arcs))))
        assert sol.value == pytest.approx(solve_p(sp, C).value)
        assert sol.y.sum() == 0


def test_sp_with_full_caps_is_the_two_stage_problem():
    rng = np.random.default_rng(6)
    for _ in range(10):
        sp = random_dag(rng, int(rng.integers(2, 9)))
        n = len(sp.arcs)
        C, c = _costs(rng, n)
        sol = capped_sp_multigraph(CappedSubproblem(sp, C, c, np.ones(n)))
        inst = Instance(C, sp, VPolytope(c[None, :]))
        assert sol.value == pytest.approx(two_stage(inst, c).value)


def test_unit_flow_on_a_single_arc():
    cost, flow = min_cost_unit_flow(2, [(0, 1)], [1.0], [5.0], 0, 1)
    assert cost == 5.0 and flow.tolist() == [1.0]


def test_unit_flow_splits_over_half_capacity_paths():
    arcs = [(0, 1), (1, 3), (0, 2), (2, 3)]
    cost, flow = min_cost_unit_flow(4, arcs, [0.5] * 4, [1.0, 1.0, 2.0, 3.0], 0, 3)
    assert cost == pytest.approx(0.5 * 2 + 0.5 * 5)
    assert flow.tolist() == [0.5] * 4


def test_unit_flow_reports_disconnection():
    assert min_cost_unit_flow(3, [(0, 1)], [1.0], [1.0], 0, 2) is None
    assert min_cost_unit_flow(2, [(0, 1)], [0.5], [1.0], 0, 1) is None
    with pytest.raises(ValidationError):
        min_cost_unit_flow(2, [(0, 1)], [1.0], [-1.0], 0, 1)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_unit_flow_equals_flow_lp(seed):
    rng = np.random.default_rng(seed)
    nodes = int(rng.integers(2, 6))
    pairs = [(a, b) for a in range(nodes) for b in range(nodes) if a != b]
    E = int(rng.integers(1, min(8, len(pairs)) + 1))
    arcs = [pairs[k] for k in rng.choice(len(pairs), size=E, replace=False)]
    cap = rng.integers(0, 5, size=E) / 4
    cost = np.round(rng.uniform(0, 5, size=E), 2)
    src, snk = (int(v) for v in rng.choice(nodes, size=2, replace=False))
    inc = np.zeros((nodes, E))
    for k, (a, b) in enumerate(arcs):
        inc[a, k] += 1.0
        inc[b, k] -= 1.0
    supply = np.zeros(nodes)
    supply[src], supply[snk] = 1.0, -1.0
    status, want = lp_by_vertices(cost, inc, supply, ("=",) * nodes, np.zeros(E), cap)
    got = min_cost_unit_flow(nodes, arcs, cap, cost, src, snk)
    if status == "infeasible":
        assert got is None
        return
    assert got is not None
    assert got[0] == pytest.approx(want, abs=1e-7)
    assert np.allclose(inc @ got[1], supply) and np.all(got[1] <= cap + 1e-12)


def test_cycle_off_the_chosen_path_is_harmless():
    sp = ShortestPath(3, ((0, 1), (1, 2), (2, 1), (0, 2)), 0, 2)
    C = np.array([1.0, 1.0, 1.0, 5.0])
    sol = capped_sp_multigraph(CappedSubproblem(sp, C, np.zeros(4), np.zeros(4)))
    assert sol.value == 2.0
