import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtst import approx, exact, oracle
from rtst.cli import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_USAGE,
    RunReport,
    dumps,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    main,
    num,
    save_instance,
)
from rtst.errors import ValidationError
from rtst.model import FAMILIES, Selection, gen_selection_tightness_instance, random_instance

FIXTURES = Path(__file__).parent / "fixtures"
GAP = str(FIXTURES / "selection_gap.json")
seeds = st.integers(0, 2**32 - 1)


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, json.loads(out.out) if out.out.strip() else None, out.err


def _write(tmp_path, inst, name="inst.json"):
    path = tmp_path / name
    save_instance(inst, str(path))
    return str(path)


def test_fixture_loads_as_two_item_selection():
    inst = load_instance(GAP)
    assert inst.structure == Selection(2)
    assert inst.C.tolist() == [10.0, 1.0]


def test_negative_costs_are_rejected(capsys):
    with pytest.raises(ValidationError, match="nonnegative"):
        load_instance(str(FIXTURES / "negative_cost.json"))
    code, doc, err = _run(capsys, "exact", str(FIXTURES / "negative_cost.json"))
    assert code == EXIT_USAGE
    assert doc["error"] == "usage" and "nonnegative" in err


def test_parse_errors_name_the_line(capsys):
    code, doc, _ = _run(capsys, "exact", str(FIXTURES / "broken.json"))
    assert code == EXIT_USAGE
    assert "line 4" in doc["message"]


def test_missing_fields_name_their_path():
    with pytest.raises(ValidationError, match="uncertainty: missing field 'b'"):
        instance_from_dict({"n": 1, "first_stage_costs": ["1"], "structure": {"kind": "all_ones"},
                            "uncertainty": {"family": "h_polytope", "c_nominal": ["0"], "A": [["1"]]}})
    with pytest.raises(ValidationError, match=r"first_stage_costs\[1\]"):
        instance_from_dict({"n": 2, "first_stage_costs": ["1", "x"], "structure": {"kind": "all_ones"},
                            "uncertainty": {"family": "v_polytope", "vertices": [["1", "1"]]}})


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from(("selection", "rep_selection", "shortest_path", "all_ones", "spanning_tree")),
       st.sampled_from(FAMILIES))
def test_instances_round_trip_exactly(seed, kind, family):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(1, 9)), kind, family)
    doc = instance_to_dict(inst)
    back = instance_from_dict(json.loads(dumps(doc)))
    assert instance_to_dict(back) == doc
    assert np.array_equal(back.C, inst.C)
    assert back.structure == inst.structure
    assert type(back.uncertainty) is type(inst.uncertainty)


def test_number_codec_is_lossless():
    for v in (0.1, 1 / 3, 2.0**-40, 1e300, -0.0):
        assert float(num(v)) == v
    assert num(float("inf")) == "inf"


def test_report_serializes_infinity():
    doc = RunReport("id", "alg", 1.0, float("inf")).to_dict()
    assert doc["guarantee"] == "inf"


def test_exact_and_relax_on_the_gap_fixture(capsys):
    code, doc, _ = _run(capsys, "exact", GAP)
    assert code == EXIT_OK
    assert float(doc["value"]) == pytest.approx(2.0, abs=1e-6)
    _, doc, _ = _run(capsys, "relax", GAP)
    assert float(doc["value"]) == pytest.approx(1.5, abs=1e-6)


def test_rounding_report_on_the_tightness_instance(capsys, tmp_path):
    path = _write(tmp_path, gen_selection_tightness_instance(0.01, 0.02, 0.01))
    _, doc, _ = _run(capsys, "round", path)
    direct = approx.round_selection(load_instance(path))
    assert float(doc["value"]) == direct.value
    assert float(doc["guarantee"]) == 2.0


def test_incompatible_family_is_a_usage_error(capsys, tmp_path):
    path = _write(tmp_path, random_instance(np.random.default_rng(1), 4, "selection", "ellipsoid"))
    code, doc, err = _run(capsys, "fptas", path)
    assert code == EXIT_USAGE
    assert "multi_budget" in doc["message"] and "multi_budget" in err


def test_unknown_command_and_missing_file(capsys):
    assert main(["nonsense"]) == EXIT_USAGE
    capsys.readouterr()
    code, doc, _ = _run(capsys, "exact", "/no/such/file.json")
    assert code == EXIT_USAGE


def test_eval_checks_the_vector_length(capsys):
    code, doc, _ = _run(capsys, "eval", GAP, "--x", "1,1,1")
    assert code == EXIT_USAGE
    path = str(FIXTURES / "selection_gap.json")
    code, doc, _ = _run(capsys, "eval", path, "--x", "1,0")
    assert code == EXIT_OK
    assert float(doc["value"]) == pytest.approx(exact.evaluate(load_instance(path), [1.0, 0.0]).value)


def test_infeasible_exit_code(capsys, tmp_path):
    # one item must be chosen but the only completion is blocked by buying the other
    inst = random_instance(np.random.default_rng(0), 2, "selection", "budgeted")
    doc = instance_to_dict(inst)
    doc["structure"] = {"kind": "selection", "p": 1}
    path = tmp_path / "p1.json"
    path.write_text(json.dumps(doc))
    code, out, _ = _run(capsys, "eval", str(path), "--x", "1,1")
    assert code == EXIT_INFEASIBLE
    assert out["error"] == "infeasible"


COMMANDS = {
    "exact": lambda inst: exact.solve_exact(inst).value,
    "relax": exact.relaxation_value,
    "oracle": lambda inst: oracle.oracle_solve(inst).opt,
    "minmax": lambda inst: approx.lb_ub_minmax(inst)[1].value,
    "best-t": lambda inst: approx.best_t_scenario(inst.uncertainty)[1],
}


@pytest.mark.parametrize("family", ["hpolytope", "vpolytope", "budgeted", "ellipsoid"])
@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_reported_values_are_rederivable(capsys, tmp_path, command, family):
    path = _write(tmp_path, random_instance(np.random.default_rng(7), 5, "rep_selection", family))
    code, doc, _ = _run(capsys, command, path)
    assert code == EXIT_OK
    assert float(doc["value"]) == COMMANDS[command](load_instance(path))


def test_family_specific_commands_are_rederivable(capsys, tmp_path):
    rng = np.random.default_rng(11)
    cases = [
        ("fptas", "selection", "multibudget", lambda i: approx.fptas(i, 0.5).value, ["--eps", "0.5"]),
        ("rs-hp0", "rep_selection", "budgeted", lambda i: approx.rs_hp0_exact(i).value, []),
        ("minmax-hp0", "selection", "budgeted", lambda i: approx.minmax_hp0(i).value, []),
        ("l1", "shortest_path", "ellipsoid", lambda i: approx.ellipsoid_l1_approx(i).value, []),
        ("round", "rep_selection", "hpolytope", lambda i: approx.round_rs(i).value, []),
        ("scenario", "selection", "vpolytope",
         lambda i: approx.scenario_approx(i, i.uncertainty.vertices.mean(axis=0)).value, []),
    ]
    for k, (cmd, kind, family, direct, extra) in enumerate(cases):
        path = _write(tmp_path, random_instance(rng, 5, kind, family), f"i{k}.json")
        code, doc, _ = _run(capsys, cmd, path, *extra)
        assert code == EXIT_OK, cmd
        assert float(doc["value"]) == direct(load_instance(path)), cmd


def test_generators_and_reductions(capsys, tmp_path):
    code = main(["gen-random", "--seed", "3", "--n", "4", "--kind", "all_ones", "--family", "vpolytope", "--size", "2"])
    text = capsys.readouterr().out
    assert code == EXIT_OK
    path = tmp_path / "two.json"
    path.write_text(text)
    code, doc, _ = _run(capsys, "reduce-2scen2ell", str(path))
    assert doc["uncertainty"]["family"] == "ellipsoid"
    code, doc, _ = _run(capsys, "reduce-vp2hp", str(path))
    # one extra item per vertex
    assert doc["n"] == 4 + 2
    code, doc, _ = _run(capsys, "gen-sp-gap", "--m", "3")
    assert doc["n"] == 6
    code, doc, _ = _run(capsys, "gen-tightness")
    assert doc["first_stage_costs"] == ["10.0", "0.02"]


def test_wall_time_only_on_request(capsys):
    _, doc, _ = _run(capsys, "exact", GAP)
    assert "wall_time" not in doc
    _, doc, _ = _run(capsys, "exact", GAP, "--timing")
    assert float(doc["wall_time"]) >= 0


def test_output_is_bit_identical_across_processes(tmp_path):
    path = _write(tmp_path, random_instance(np.random.default_rng(5), 6, "selection", "ellipsoid"))
    cmd = [sys.executable, "-m", "rtst", "exact", path]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and first
    gen = [sys.executable, "-m", "rtst", "gen-random", "--seed", "9"]
    assert subprocess.run(gen, capture_output=True).stdout == subprocess.run(gen, capture_output=True).stdout
