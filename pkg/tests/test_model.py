import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import simple_paths
from rtst.errors import UnsupportedError, ValidationError
from rtst.model import (
    AllOnes,
    Instance,
    RepSelection,
    Selection,
    ShortestPath,
    SpanningTree,
    build_linear_system,
    gen_chain_instance,
    gen_selection_gap_instance,
    gen_selection_tightness_instance,
    gen_sp_gap_instance,
    gen_split_minmax_sp,
    random_dag,
    random_instance,
    random_structure,
    reduce_two_scenario_to_ellipsoid,
    reduce_vp_to_hp,
)
from rtst.oracle import oracle_solve
from rtst.uncertainty import Budgeted, Ellipsoid, HPolytope, VPolytope

seeds = st.integers(0, 2**32 - 1)


def _binary_solutions(ls, n):
    allz = np.array(list(itertools.product([0.0, 1.0], repeat=n)))
    ok = np.all(np.abs(allz @ ls.H.T - ls.g) < 1e-9, axis=1)
    return {tuple(z) for z in allz[ok]}


def test_selection_system_is_one_cardinality_row():
    ls = build_linear_system(Selection(2), 3)
    assert ls.H.tolist() == [[1.0, 1.0, 1.0]]
    assert ls.g.tolist() == [2.0]
    assert ls.senses == ("=",)


def test_rep_selection_system_has_a_row_per_block():
    ls = build_linear_system(RepSelection(((0, 1), (2,))), 3)
    assert ls.H.tolist() == [[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    assert ls.g.tolist() == [1.0, 1.0]


def test_two_path_gap_graph_flow_system():
    inst = gen_sp_gap_instance(2)
    ls = inst.linear_system()
    assert ls.H.shape == (4, 4)
    assert ls.g.tolist() == [1.0, -1.0, 0.0, 0.0]


def test_spanning_tree_has_no_linear_system():
    with pytest.raises(UnsupportedError):
        build_linear_system(SpanningTree(3, ((0, 1), (1, 2), (0, 2))), 3)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_flow_system_binary_points_are_simple_paths_on_dags(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    st_ = random_dag(rng, n)
    assert st_.is_acyclic()
    got = _binary_solutions(build_linear_system(st_, n), n)
    want = {tuple(z) for z in simple_paths(st_.nodes, st_.arcs, st_.s, st_.t)}
    assert got == want


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_selection_systems_count_feasible_solutions(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    sel = random_structure(rng, "selection", n)
    assert len(_binary_solutions(build_linear_system(sel, n), n)) == math.comb(n, sel.p)
    rs = random_structure(rng, "rep_selection", n)
    assert len(_binary_solutions(build_linear_system(rs, n), n)) == math.prod(len(b) for b in rs.partition)


def test_instance_validation():
    U = Budgeted(np.ones(2), np.ones(2), 1.0)
    with pytest.raises(ValidationError, match="nonnegative"):
        Instance(np.array([-1.0, 1.0]), Selection(1), U)
    with pytest.raises(ValidationError, match="dimension"):
        Instance(np.ones(3), Selection(1), U)
    with pytest.raises(ValidationError):
        Instance(np.ones(2), Selection(3), U)
    with pytest.raises(ValidationError):
        Instance(np.ones(2), RepSelection(((0,),)), U)
    with pytest.raises(ValidationError, match="path"):
        Instance(np.ones(2), ShortestPath(3, ((0, 1), (2, 1)), 0, 2), U)
    with pytest.raises(ValidationError, match="connected"):
        Instance(np.ones(2), SpanningTree(4, ((0, 1), (2, 3))), U)


def test_instance_costs_are_read_only():
    inst = gen_selection_gap_instance()
    with pytest.raises(ValueError):
        inst.C[0] = 5.0


def test_gap_generators_have_documented_shape():
    sel = gen_selection_gap_instance()
    assert sel.C.tolist() == [10.0, 1.0] and sel.structure == Selection(2)
    tight = gen_selection_tightness_instance(0.01, 0.02, 0.01)
    assert tight.uncertainty.c_nominal.tolist() == [0.0, 0.01]
    assert tight.uncertainty.A.tolist() == [[1.0, 0.51]]
    sp = gen_sp_gap_instance(3)
    assert sp.n == 6 and sp.structure.nodes == 5
    assert sp.uncertainty.gamma == 3.0
    with pytest.raises(ValidationError):
        gen_sp_gap_instance(3, M=2.0)
    with pytest.raises(ValidationError):
        gen_selection_tightness_instance(0.6, 0.1, 0.1)


def test_chain_instance_uses_every_item():
    U = HPolytope(np.zeros(3), np.ones((1, 3)), np.array([1.0]))
    inst = gen_chain_instance(3, [1.0, 2.0, 3.0], U)
    assert _binary_solutions(inst.linear_system(), 3) == {(1.0, 1.0, 1.0)}
    assert isinstance(gen_chain_instance(3, [1.0, 2.0, 3.0], U, all_ones=True).structure, AllOnes)


def test_split_graph_recovers_min_max_path():
    # two s-t routes: 0->1->3 and 0->2->3
    arcs = ((0, 1), (1, 3), (0, 2), (2, 3))
    scenarios = np.array([[1.0, 1.0, 3.0, 0.0], [4.0, 0.0, 1.0, 1.0]])
    inst = gen_split_minmax_sp(4, arcs, 0, 3, scenarios)
    paths = simple_paths(4, arcs, 0, 3)
    minmax = min(max(float(v @ z) for v in scenarios) for z in paths)
    assert oracle_solve(inst).opt == pytest.approx(minmax)


def test_single_scenario_hull_value():
    rng = np.random.default_rng(2)
    for _ in range(5):
        n = int(rng.integers(1, 5))
        c = np.round(rng.uniform(0, 5, size=n), 2)
        inst = Instance(np.round(rng.uniform(0, 5, size=n), 2), AllOnes(), VPolytope(c[None, :]))
        assert oracle_solve(inst).opt == pytest.approx(np.minimum(inst.C, c).sum())
        red = reduce_vp_to_hp(inst)
        assert oracle_solve(red).opt == pytest.approx(np.minimum(inst.C, c).sum())


def test_vertex_hull_of_small_gap_data_reduces_to_equal_optimum():
    inst = Instance(np.array([10.0, 1.0]), AllOnes(), VPolytope(np.array([[1.0, 0.0], [0.0, 2.0]])))
    red = reduce_vp_to_hp(inst)
    assert red.n == 4
    assert oracle_solve(red).opt == pytest.approx(oracle_solve(inst).opt, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_vertex_hull_reduction_preserves_optimum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    inst = random_instance(rng, n, "all_ones", "vpolytope")
    assert oracle_solve(reduce_vp_to_hp(inst)).opt == pytest.approx(oracle_solve(inst).opt, abs=1e-6)


def test_equal_scenarios_give_zero_ellipsoid():
    c = np.array([2.0, 0.5, 1.0])
    inst = Instance(np.array([1.0, 1.0, 3.0]), AllOnes(), VPolytope(np.vstack([c, c])))
    red = reduce_two_scenario_to_ellipsoid(inst)
    assert np.all(red.uncertainty.A == 0)
    assert oracle_solve(red).opt == pytest.approx(2 * np.minimum(inst.C, c).sum())


def test_two_scenario_reduction_doubles_optimum():
    inst = Instance(np.ones(2), AllOnes(), VPolytope(np.array([[3.0, 0.0], [0.0, 3.0]])))
    red = reduce_two_scenario_to_ellipsoid(inst)
    assert isinstance(red.uncertainty, Ellipsoid)
    assert oracle_solve(red).opt == pytest.approx(2 * oracle_solve(inst).opt, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_two_scenario_reduction_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    inst = random_instance(rng, n, "all_ones", "vpolytope", size=2)
    red = reduce_two_scenario_to_ellipsoid(inst)
    assert oracle_solve(red).opt == pytest.approx(2 * oracle_solve(inst).opt, abs=1e-6)


def test_reductions_reject_other_inputs():
    inst = gen_selection_gap_instance()
    with pytest.raises(UnsupportedError):
        reduce_vp_to_hp(inst)
    three = Instance(np.ones(2), AllOnes(), VPolytope(np.eye(2).repeat(2, axis=0)[:3]))
    with pytest.raises(UnsupportedError):
        reduce_two_scenario_to_ellipsoid(three)


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from(("selection", "rep_selection", "shortest_path", "all_ones", "spanning_tree")))
def test_random_structures_validate(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    random_structure(rng, kind, n).validate(n)
