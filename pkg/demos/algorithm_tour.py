"""Run every applicable algorithm on a few random instances and compare with the oracle.

Values are true robust costs of the returned first-stage decisions, so each
column can be checked against the claimed factor directly.
"""
import math

import numpy as np

from rtst import (
    best_t_scenario,
    ellipsoid_l1_approx,
    fptas,
    lb_ub_minmax,
    minmax_hp0,
    oracle_solve,
    round_rs,
    round_selection,
    rs_hp0_exact,
    scenario_approx,
    solve_exact,
)
from rtst.model import random_instance

CASES = [
    ("selection", "budgeted"),
    ("selection", "ellipsoid"),
    ("rep_selection", "budgeted"),
    ("rep_selection", "multibudget"),
    ("shortest_path", "vpolytope"),
    ("all_ones", "hpolytope"),
]


def runs(inst, family, kind):
    yield "branch and bound", solve_exact(inst).value, 1.0
    bounds, res = lb_ub_minmax(inst)
    yield "min-max bounds", res.value, bounds.rho
    c, t = best_t_scenario(inst.uncertainty)
    yield "best single scenario", scenario_approx(inst, c).value, t
    if family == "budgeted":
        res = minmax_hp0(inst)
        yield "budgeted min-max", res.value, res.guarantee
        if kind == "rep_selection":
            yield "budgeted representatives", rs_hp0_exact(inst).value, 1.0
    if family == "multibudget":
        yield "budget grid eps=1/4", fptas(inst, 0.25).value, 1.25
    if family == "ellipsoid":
        res = ellipsoid_l1_approx(inst)
        yield "l1 surrogate", res.value, res.guarantee
    if kind == "selection" and family != "vpolytope":
        yield "rounding", round_selection(inst).value, 2.0
    if kind == "rep_selection" and family != "vpolytope":
        yield "rounding", round_rs(inst).value, 2.0


def main():
    rng = np.random.default_rng(2024)
    for kind, family in CASES:
        inst = random_instance(rng, 7, kind, family)
        opt = oracle_solve(inst).opt
        print(f"{kind} / {family}: optimum {opt:.4f}")
        for name, value, factor in runs(inst, family, kind):
            ratio = value / opt if opt > 0 else math.nan
            mark = "ok" if value <= factor * opt + 1e-6 * (1 + opt) else "VIOLATED"
            print(f"  {name:26s} {value:9.4f}  ratio {ratio:6.3f}  claimed <= {factor:6.3f}  {mark}")
        print()


if __name__ == "__main__":
    main()
