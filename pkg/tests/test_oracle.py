import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import simple_paths
from rtst.deterministic import incremental, two_stage
from rtst.errors import NoRecourseError, UnsupportedError
from rtst.model import (
    AllOnes,
    Instance,
    Selection,
    gen_selection_gap_instance,
    random_instance,
    random_structure,
)
from rtst.oracle import adversary_value, evaluate_by_enumeration, feasible_solutions, oracle_solve, recourse_table
from rtst.uncertainty import Budgeted, Ellipsoid, HPolytope, VPolytope, contains

seeds = st.integers(0, 2**32 - 1)


def test_small_gap_instance_costs_two():
    rep = oracle_solve(gen_selection_gap_instance())
    assert rep.opt == pytest.approx(2.0, abs=1e-9)
    # buying nothing and buying the cheap item both cost 2
    assert rep.x.tolist() in ([0.0, 0.0], [0.0, 1.0])


def test_singleton_set_is_elementwise_minimum():
    C = np.array([3.0, 1.0, 4.0])
    c = np.array([2.0, 5.0, 0.5])
    rep = oracle_solve(Instance(C, AllOnes(), VPolytope(c[None, :])))
    assert rep.opt == pytest.approx(3.5)


def test_recourse_table_for_selection():
    table = recourse_table(Selection(1), 2)
    assert set(table) == {(0, 0), (1, 0), (0, 1)}
    assert table[(0, 0)].tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert table[(1, 0)].tolist() == [[0.0, 0.0]]


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(("selection", "rep_selection", "shortest_path", "all_ones", "spanning_tree")))
def test_recourse_table_lists_exact_completions(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    structure = random_structure(rng, kind, n)
    feas = {tuple(z) for z in feasible_solutions(structure, n)}
    if kind == "shortest_path":
        assert feas == {tuple(z) for z in simple_paths(structure.nodes, structure.arcs, structure.s, structure.t)}
    table = recourse_table(structure, n)
    for x in itertools.product([0, 1], repeat=n):
        want = {tuple(np.array(z) - np.array(x)) for z in feas if all(a <= b for a, b in zip(x, z))}
        if want:
            assert {tuple(y) for y in table[x]} == want
        else:
            assert x not in table


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(("selection", "rep_selection", "shortest_path", "all_ones", "spanning_tree")))
def test_single_scenario_matches_two_stage(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    structure = random_structure(rng, kind, n)
    C = np.round(rng.uniform(0, 10, size=n), 1)
    c = np.round(rng.uniform(0, 10, size=n), 1)
    inst = Instance(C, structure, VPolytope(c[None, :]))
    assert oracle_solve(inst).opt == pytest.approx(two_stage(inst, c).value)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(("hpolytope", "vpolytope", "budgeted", "multibudget", "ellipsoid")))
def test_adversary_scenario_certifies_the_value(seed, family):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    inst = random_instance(rng, n, "selection", family)
    table = recourse_table(inst.structure, n)
    Y = table[list(table)[int(rng.integers(0, len(table)))]]
    val, c, _ = adversary_value(inst.uncertainty, Y)
    assert contains(inst.uncertainty, c, 1e-6)
    assert float((Y @ c).min()) == pytest.approx(val, abs=1e-5 * (1 + abs(val)))


def test_full_table_records_every_first_stage_choice():
    inst = gen_selection_gap_instance()
    rep = oracle_solve(inst, full_table=True)
    assert set(rep.table) == {(0, 0), (1, 0), (0, 1), (1, 1)}
    assert rep.opt == min(rep.table.values())
    assert rep.table[(1, 1)] == pytest.approx(11.0)


def test_pruned_search_agrees_with_full_table():
    rng = np.random.default_rng(12)
    for family in ("vpolytope", "budgeted", "ellipsoid"):
        inst = random_instance(rng, 5, "rep_selection", family)
        pruned = oracle_solve(inst)
        full = oracle_solve(inst, full_table=True)
        assert pruned.opt == pytest.approx(full.opt, abs=1e-9)
        assert pruned.evaluated <= full.evaluated


def test_enumerated_evaluation_matches_incremental_on_a_singleton():
    c = np.array([1.0, 4.0, 2.0])
    inst = Instance(np.ones(3), Selection(2), VPolytope(c[None, :]))
    ev = evaluate_by_enumeration(inst, [1.0, 0.0, 0.0])
    assert ev.value == pytest.approx(1.0 + incremental(inst.structure, np.array([1.0, 0, 0]), c)[0])
    with pytest.raises(NoRecourseError):
        evaluate_by_enumeration(inst, [1.0, 1.0, 1.0])


def test_ellipsoid_on_a_kink():
    # two symmetric recourse vectors whose norm term cancels on their average
    U = Ellipsoid(np.ones(2), np.array([[1.0], [-1.0]]))
    val, c, _ = adversary_value(U, np.eye(2))
    assert val == pytest.approx(1.0, abs=1e-7)
    assert c == pytest.approx([1.0, 1.0], abs=1e-6)


def test_polyhedral_adversary_on_a_budget():
    U = Budgeted(np.zeros(2), np.ones(2), 1.0)
    val, c, _ = adversary_value(U, np.eye(2))
    assert val == pytest.approx(0.5)
    assert c == pytest.approx([0.5, 0.5])
    H = HPolytope(np.zeros(2), np.array([[1.0, 1.0]]), np.array([1.0]))
    assert adversary_value(H, np.eye(2))[0] == pytest.approx(0.5)


def test_size_limit():
    inst = random_instance(np.random.default_rng(0), 13, "selection", "budgeted")
    with pytest.raises(UnsupportedError):
        oracle_solve(inst)
    with pytest.raises(UnsupportedError):
        oracle_solve(gen_selection_gap_instance(), limit=1)
