"""Command-line front end: instance files, algorithm dispatch and JSON reports.

Instance files are JSON documents::

    {"n": 2,
     "first_stage_costs": ["10", "1"],
     "structure": {"kind": "selection", "p": 2},
     "uncertainty": {"family": "h_polytope", "c_nominal": ["0", "0"],
                     "A": [["1", "0.5"]], "b": ["1"]}}

Real numbers are written as decimal strings so that files round-trip exactly;
plain JSON numbers are accepted on input as well.  Reports go to standard
output as one JSON document.  Exit codes: 0 ok, 1 infeasible, 2 usage or
validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import approx, exact, oracle
from .errors import InfeasibleError, NumericalError, RtstError, UnsupportedError, ValidationError
from .model import (
    FAMILIES,
    STRUCTURE_KINDS,
    AllOnes,
    Instance,
    RepSelection,
    Selection,
    ShortestPath,
    SpanningTree,
    gen_selection_gap_instance,
    gen_selection_tightness_instance,
    gen_sp_gap_instance,
    random_instance,
    reduce_two_scenario_to_ellipsoid,
    reduce_vp_to_hp,
)
from .uncertainty import Budgeted, Ellipsoid, HPolytope, MultiBudget, VPolytope

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

# --------------------------------------------------------------------------- number codec


def num(v) -> str:
    """Shortest decimal string that parses back to the same double."""
    v = float(v)
    if math.isnan(v):
        raise NumericalError("refusing to serialize NaN")
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def vec(a) -> list:
    return [num(v) for v in np.asarray(a, dtype=float).ravel()]


def mat(a) -> list:
    return [vec(row) for row in np.atleast_2d(np.asarray(a, dtype=float))]


def _parse_num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ValidationError(f"{where}: expected a number, got {v!r}")
    try:
        return float(v)
    except ValueError:
        raise ValidationError(f"{where}: cannot parse {v!r} as a number") from None


def _parse_vec(v, where: str) -> np.ndarray:
    if not isinstance(v, list):
        raise ValidationError(f"{where}: expected a list")
    return np.array([_parse_num(e, f"{where}[{i}]") for i, e in enumerate(v)], dtype=float)


def _parse_mat(v, where: str) -> np.ndarray:
    if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
        raise ValidationError(f"{where}: expected a list of rows")
    rows = [_parse_vec(r, f"{where}[{i}]") for i, r in enumerate(v)]
    if len({r.size for r in rows}) > 1:
        raise ValidationError(f"{where}: rows have different lengths")
    return np.array(rows, dtype=float)


def _parse_int(v, where: str) -> int:
    if isinstance(v, bool):
        raise ValidationError(f"{where}: expected an integer")
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: expected an integer, got {v!r}") from None
    if not f.is_integer():
        raise ValidationError(f"{where}: expected an integer, got {v!r}")
    return int(f)


def _field(d: dict, key: str, where: str):
    if key not in d:
        raise ValidationError(f"{where}: missing field {key!r}")
    return d[key]


# --------------------------------------------------------------------------- instance codec


def _structure_from(d: dict, n: int):
    where = "structure"
    kind = _field(d, "kind", where)
    if kind == "selection":
        return Selection(_parse_int(_field(d, "p", where), "structure.p"))
    if kind == "rep_selection":
        part = _field(d, "partition", where)
        return RepSelection(tuple(tuple(_parse_int(i, f"structure.partition[{b}]") for i in blk)
                                  for b, blk in enumerate(part)))
    if kind in ("shortest_path", "spanning_tree"):
        key = "arcs" if kind == "shortest_path" else "edges"
        pairs = tuple((_parse_int(a, f"structure.{key}[{k}]"), _parse_int(b, f"structure.{key}[{k}]"))
                      for k, (a, b) in enumerate(_field(d, key, where)))
        nodes = d.get("nodes")
        nodes = _parse_int(nodes, "structure.nodes") if nodes is not None else 1 + max(max(p) for p in pairs)
        if kind == "spanning_tree":
            return SpanningTree(nodes, pairs)
        return ShortestPath(nodes, pairs, _parse_int(_field(d, "s", where), "structure.s"),
                            _parse_int(_field(d, "t", where), "structure.t"))
    if kind == "all_ones":
        return AllOnes()
    raise ValidationError(f"structure.kind: unknown kind {kind!r}")


def _uncertainty_from(d: dict):
    where = "uncertainty"
    fam = _field(d, "family", where)
    get = lambda key: _field(d, key, where)  # noqa: E731
    if fam == "h_polytope":
        return HPolytope(_parse_vec(get("c_nominal"), "uncertainty.c_nominal"),
                         _parse_mat(get("A"), "uncertainty.A"), _parse_vec(get("b"), "uncertainty.b"))
    if fam == "v_polytope":
        return VPolytope(_parse_mat(get("vertices"), "uncertainty.vertices"))
    if fam == "ellipsoid":
        return Ellipsoid(_parse_vec(get("c_nominal"), "uncertainty.c_nominal"), _parse_mat(get("A"), "uncertainty.A"))
    if fam == "budgeted":
        return Budgeted(_parse_vec(get("c_nominal"), "uncertainty.c_nominal"), _parse_vec(get("d"), "uncertainty.d"),
                        _parse_num(get("gamma"), "uncertainty.gamma"))
    if fam == "multi_budget":
        subsets = tuple(tuple(_parse_int(i, f"uncertainty.subsets[{j}]") for i in s)
                        for j, s in enumerate(get("subsets")))
        return MultiBudget(_parse_vec(get("c_nominal"), "uncertainty.c_nominal"), subsets,
                           _parse_vec(get("gammas"), "uncertainty.gammas"))
    raise ValidationError(f"uncertainty.family: unknown family {fam!r}")


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise ValidationError("instance document must be a JSON object")
    n = _parse_int(_field(doc, "n", "instance"), "n")
    C = _parse_vec(_field(doc, "first_stage_costs", "instance"), "first_stage_costs")
    if C.size != n:
        raise ValidationError(f"first_stage_costs: expected {n} entries, got {C.size}")
    structure = _structure_from(_field(doc, "structure", "instance"), n)
    U = _uncertainty_from(_field(doc, "uncertainty", "instance"))
    return Instance(C, structure, U)


def instance_to_dict(instance: Instance) -> dict:
    st, U = instance.structure, instance.uncertainty
    s: dict = {"kind": st.kind}
    if isinstance(st, Selection):
        s["p"] = st.p
    elif isinstance(st, RepSelection):
        s["partition"] = [list(b) for b in st.partition]
    elif isinstance(st, ShortestPath):
        s.update(nodes=st.nodes, arcs=[list(a) for a in st.arcs], s=st.s, t=st.t)
    elif isinstance(st, SpanningTree):
        s.update(nodes=st.nodes, edges=[list(e) for e in st.edges])
    if isinstance(U, HPolytope):
        u = {"family": "h_polytope", "c_nominal": vec(U.c_nominal), "A": mat(U.A), "b": vec(U.b)}
    elif isinstance(U, VPolytope):
        u = {"family": "v_polytope", "vertices": mat(U.vertices)}
    elif isinstance(U, Ellipsoid):
        u = {"family": "ellipsoid", "c_nominal": vec(U.c_nominal), "A": mat(U.A)}
    elif isinstance(U, Budgeted):
        u = {"family": "budgeted", "c_nominal": vec(U.c_nominal), "d": vec(U.d), "gamma": num(U.gamma)}
    else:
        u = {"family": "multi_budget", "c_nominal": vec(U.c_nominal), "subsets": [list(x) for x in U.subsets],
             "gammas": vec(U.gammas)}
    return {"n": instance.n, "first_stage_costs": vec(instance.C), "structure": s, "uncertainty": u}


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def load_instance(path: str) -> Instance:
    with open(path, "rb") as fh:
        raw = fh.read()
    return _instance_from_bytes(raw)


def _instance_from_bytes(raw: bytes) -> Instance:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(doc)


def save_instance(instance: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(instance_to_dict(instance)))


def instance_id(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()[:16]


# --------------------------------------------------------------------------- reports


@dataclass
class RunReport:
    instance_id: str
    algorithm: str
    value: float
    guarantee: float | None = None
    lb: float | None = None
    ub: float | None = None
    wall_time: float | None = None
    vectors: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"instance_id": self.instance_id, "algorithm": self.algorithm, "value": num(self.value)}
        for key in ("guarantee", "lb", "ub", "wall_time"):
            v = getattr(self, key)
            if v is not None:
                out[key] = num(v)
        out.update({k: vec(v) for k, v in self.vectors.items() if v is not None})
        out.update(self.info)
        return out


def _parse_x(text: str | None, n: int) -> np.ndarray:
    if text is None:
        raise ValidationError("eval needs --x, e.g. --x 1,0,1")
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != n:
        raise ValidationError(f"--x must have {n} entries")
    return np.array([_parse_num(p, "--x") for p in parts])


def _representative(instance: Instance, how: str) -> np.ndarray:
    U = instance.uncertainty
    if how == "centroid":
        if not isinstance(U, VPolytope):
            raise UnsupportedError("the centroid scenario needs a v_polytope uncertainty set")
        return U.centroid
    if how == "nominal":
        if isinstance(U, VPolytope):
            raise UnsupportedError("v_polytope has no nominal scenario; use --scenario centroid")
        return U.c_nominal
    if how == "best-t":
        return approx.best_t_scenario(U)[0]
    return _parse_x(how, instance.n)


def _approx_report(iid: str, name: str, res) -> RunReport:
    info = {}
    if res.model_value is not None:
        info["model_value"] = num(res.model_value)
    for k, v in res.extra.items():
        if isinstance(v, np.ndarray):
            info[k] = vec(v)
        elif isinstance(v, float):
            info[k] = num(v)
        else:
            info[k] = v
    return RunReport(iid, name, res.value, res.guarantee, res.lb, None, None, {"x": res.x, "y": res.y}, info)


SOLVER_COMMANDS = ("exact", "relax", "eval", "oracle", "minmax", "minmax-hp0", "scenario", "best-t", "fptas",
                   "round", "rs-hp0", "l1", "nonneg")


def run(command: str, instance: Instance, *, iid: str = "", eps: float = 0.25, x: str | None = None,
        limit: int = oracle.ORACLE_LIMIT, scenario: str | None = None) -> RunReport:
    """Run one solver command and collect its report (without timing)."""
    U = instance.uncertainty
    if command == "exact":
        sol = exact.solve_exact(instance)
        return RunReport(iid, "branch-and-bound", sol.value, 1.0, vectors={
            "x": sol.x, "y": sol.y, "worst_scenario": sol.worst_scenario.c})
    if command == "relax":
        return RunReport(iid, "continuous relaxation", exact.relaxation_value(instance))
    if command == "eval":
        xv = _parse_x(x, instance.n)
        ev = exact.evaluate(instance, xv)
        return RunReport(iid, "evaluation", ev.value, vectors={"x": xv, "y": ev.y, "worst_scenario": ev.worst.c})
    if command == "oracle":
        rep = oracle.oracle_solve(instance, limit=limit)
        return RunReport(iid, "enumeration oracle", rep.opt, 1.0, vectors={
            "x": rep.x, "y": rep.y, "worst_scenario": rep.worst.c}, info={"evaluated": rep.evaluated})
    if command == "minmax":
        bounds, res = approx.lb_ub_minmax(instance)
        rep = _approx_report(iid, "min-max bounds", res)
        rep.lb, rep.ub = bounds.lb, bounds.ub
        return rep
    if command == "minmax-hp0":
        res = approx.minmax_hp0(instance)
        rep = _approx_report(iid, "budgeted min-max shortcut", res)
        rep.ub = res.model_value
        return rep
    if command == "scenario":
        how = scenario or ("centroid" if isinstance(U, VPolytope) else "nominal")
        c = _representative(instance, how)
        rep = _approx_report(iid, f"single scenario ({how})", approx.scenario_approx(instance, c))
        rep.vectors["scenario"] = c
        return rep
    if command == "best-t":
        c, t = approx.best_t_scenario(U)
        return RunReport(iid, "best scenario ratio", t, t, vectors={"scenario": c})
    if command == "fptas":
        if not isinstance(U, MultiBudget):
            raise UnsupportedError("fptas requires a multi_budget uncertainty set")
        return _approx_report(iid, f"budget-dual grid (eps={num(eps)})", approx.fptas(instance, eps))
    if command == "round":
        if isinstance(instance.structure, Selection):
            return _approx_report(iid, "relaxation rounding (selection)", approx.round_selection(instance))
        if isinstance(instance.structure, RepSelection):
            return _approx_report(iid, "relaxation rounding (representatives)", approx.round_rs(instance))
        raise UnsupportedError("round requires a selection or rep_selection structure")
    if command == "rs-hp0":
        sol = approx.rs_hp0_exact(instance)
        return RunReport(iid, "budgeted representatives selection", sol.value, 1.0, vectors={"x": sol.x, "y": sol.y})
    if command in ("l1", "nonneg"):
        if not isinstance(U, Ellipsoid):
            raise UnsupportedError(f"{command} requires an ellipsoid uncertainty set")
        f = approx.ellipsoid_l1_approx if command == "l1" else approx.ellipsoid_nonneg_approx
        return _approx_report(iid, "l1 norm surrogate" if command == "l1" else "nonnegative-A surrogate", f(instance))
    raise ValidationError(f"unknown command {command!r}")


# --------------------------------------------------------------------------- argument parsing


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rtst", description="Robust two-stage combinatorial optimization.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SOLVER_COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("instance", help="instance JSON file, or - for standard input")
        sp.add_argument("--timing", action="store_true", help="include wall time in the report")
        if name == "eval":
            sp.add_argument("--x", required=True, help="comma-separated binary first-stage vector")
        if name == "oracle":
            sp.add_argument("--limit", type=int, default=oracle.ORACLE_LIMIT)
        if name == "fptas":
            sp.add_argument("--eps", type=float, default=0.25, help="grid step, 1/k for an integer k")
        if name == "scenario":
            sp.add_argument("--scenario", default=None,
                            help="centroid, nominal, best-t, or a comma-separated cost vector")
    for name in ("reduce-vp2hp", "reduce-2scen2ell"):
        sub.add_parser(name).add_argument("instance")
    sub.add_parser("gen-selection-gap")
    g = sub.add_parser("gen-tightness")
    g.add_argument("--mu", type=float, default=0.01)
    g.add_argument("--gamma", type=float, default=0.02)
    g.add_argument("--eps", type=float, default=0.01)
    g = sub.add_parser("gen-sp-gap")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--big", type=float, default=None, help="cost M of the expensive arcs")
    g = sub.add_parser("gen-random")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n", type=int, default=6)
    g.add_argument("--kind", choices=STRUCTURE_KINDS + ("spanning_tree",), default="selection")
    g.add_argument("--family", choices=FAMILIES, default="budgeted")
    g.add_argument("--size", type=int, default=None, help="vertices, rows, subsets or columns of A")
    return p


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None


def _dispatch(args) -> str:
    cmd = args.command
    if cmd.startswith("gen-"):
        if cmd == "gen-selection-gap":
            inst = gen_selection_gap_instance()
        elif cmd == "gen-tightness":
            inst = gen_selection_tightness_instance(args.mu, args.gamma, args.eps)
        elif cmd == "gen-sp-gap":
            inst = gen_sp_gap_instance(args.m, args.big)
        else:
            inst = random_instance(np.random.default_rng(args.seed), args.n, args.kind, args.family, size=args.size)
        return dumps(instance_to_dict(inst))
    raw = _read_input(args.instance)
    inst = _instance_from_bytes(raw)
    if cmd == "reduce-vp2hp":
        return dumps(instance_to_dict(reduce_vp_to_hp(inst)))
    if cmd == "reduce-2scen2ell":
        return dumps(instance_to_dict(reduce_two_scenario_to_ellipsoid(inst)))
    opts = {k: getattr(args, k) for k in ("eps", "x", "limit", "scenario") if hasattr(args, k)}
    start = time.perf_counter()
    report = run(cmd, inst, iid=instance_id(raw), **opts)
    if args.timing:
        report.wall_time = time.perf_counter() - start
    return dumps(report.to_dict())


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        sys.stdout.write(_dispatch(args))
        return EXIT_OK
    except RtstError as exc:
        if isinstance(exc, InfeasibleError):
            code, kind = EXIT_INFEASIBLE, "infeasible"
        elif isinstance(exc, (UnsupportedError, ValidationError)):
            code, kind = EXIT_USAGE, "usage"
        else:
            code, kind = EXIT_NUMERICAL, "numerical"
        message = str(exc)
    sys.stdout.write(dumps({"error": kind, "message": message}))
    print(f"rtst: {message}", file=sys.stderr)
    return code
