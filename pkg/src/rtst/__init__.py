"""Robust two-stage combinatorial optimization under polyhedral and ellipsoidal uncertainty."""
from .approx import (
    best_t_scenario,
    ellipsoid_l1_approx,
    ellipsoid_nonneg_approx,
    fptas,
    lb_ub_minmax,
    minmax_hp0,
    round_rs,
    round_selection,
    rs_hp0_exact,
    scenario_approx,
)
from .deterministic import incremental, solve_p, two_stage
from .errors import (
    InfeasibleError,
    NoRecourseError,
    NumericalError,
    RtstError,
    UnsupportedError,
    ValidationError,
)
from .exact import evaluate, relaxation_value, solve_exact
from .model import (
    AllOnes,
    ApproxResult,
    Bounds,
    Instance,
    RepSelection,
    Selection,
    ShortestPath,
    SpanningTree,
    TwoStageSolution,
)
from .oracle import oracle_solve
from .simplex import LpProblem, LpResult, LpStatus, lp_solve
from .uncertainty import Budgeted, Ellipsoid, HPolytope, MultiBudget, VPolytope

__version__ = "0.1.0"
