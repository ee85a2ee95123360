"""Approximation algorithms and special-case exact algorithms.

Every routine reports ``ApproxResult.value`` as the true robust cost of the
first-stage decision it returns, recomputed with :func:`rtst.exact.evaluate`,
so that guarantees can be checked against an independent optimum.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .deterministic import two_stage
from .errors import InfeasibleError, NumericalError, UnsupportedError, ValidationError
from .exact import CompactModel, branch_and_bound, build_compact_model, evaluate, solve_relaxation
from .model import AllOnes, ApproxResult, Bounds, Instance, RepSelection, Selection, ShortestPath, TwoStageSolution
from .simplex import LpProblem, lp_solve
from .subproblems import CappedSubproblem, grid_units, solve_capped
from .uncertainty import (
    POLYHEDRAL,
    TAU,
    Budgeted,
    Ellipsoid,
    MultiBudget,
    ScenarioCertificate,
    VPolytope,
    contains,
    coordinate_max,
    support_max,
)


def _root(instance: Instance):
    model = build_compact_model(instance)
    rel = solve_relaxation(model)
    if rel is None:
        raise InfeasibleError("relaxation is infeasible")
    return model, rel


# --------------------------------------------------------------------------- min-max bounds


def _minmax_ub(instance: Instance):
    """Optimal single-level min-max solution with binary first- and second-stage vectors."""
    model = build_compact_model(instance)
    n = instance.n
    U = instance.uncertainty

    def leaf_value(assign):
        x, y = assign[:n], assign[n:]
        return float(instance.C @ x + support_max(U, y)[0]), assign

    return branch_and_bound(model, np.arange(2 * n), leaf_value)


def lb_ub_minmax(instance: Instance) -> tuple[Bounds, ApproxResult]:
    """Lower bound from the continuous min-max problem, upper bound from its binary version."""
    lb = solve_relaxation(build_compact_model(instance)).bound
    rep = _minmax_ub(instance)
    bounds = Bounds(float(lb), float(rep.value))
    x = np.round(rep.x)
    res = ApproxResult(x, evaluate(instance, x).value, bounds.rho, bounds.lb, bounds.ub, np.round(rep.y))
    return bounds, res


def minmax_hp0(instance: Instance) -> ApproxResult:
    """Binary min-max optimum under a single budget: two nominal two-stage solves."""
    U = instance.uncertainty
    if not isinstance(U, Budgeted):
        raise UnsupportedError("this algorithm needs a budgeted uncertainty set")
    low = two_stage(instance, U.c_nominal)
    high = two_stage(instance, U.c_nominal + U.d)
    v_low = low.value + U.gamma
    pick, ub = (low, v_low) if v_low <= high.value else (high, high.value)
    lb = solve_relaxation(build_compact_model(instance)).bound
    bounds = Bounds(float(lb), float(ub))
    return ApproxResult(pick.x, evaluate(instance, pick.x).value, bounds.rho, bounds.lb, ub, pick.y)


# --------------------------------------------------------------------------- scenario based


def _scenario_ratio(U, c_tilde) -> float:
    top = coordinate_max(U)
    ratios = [1.0]
    for hi, lo in zip(top, c_tilde):
        if hi <= TAU:
            continue
        ratios.append(math.inf if lo <= TAU else hi / lo)
    return max(ratios)


def scenario_approx(instance: Instance, c_tilde) -> ApproxResult:
    """Solve the two-stage problem for one representative scenario ``c_tilde``."""
    c_tilde = np.asarray(c_tilde, dtype=float)
    if not contains(instance.uncertainty, c_tilde, 1e-7):
        raise ValidationError("representative scenario is not in the uncertainty set")
    sol = two_stage(instance, c_tilde)
    t = _scenario_ratio(instance.uncertainty, c_tilde)
    return ApproxResult(sol.x, evaluate(instance, sol.x).value, t, None, sol.value, sol.y)


def _ellipsoid_best_t(U: Ellipsoid, top: np.ndarray, tol: float = 1e-10, max_rounds: int = 500) -> np.ndarray:
    """Maximize ``s`` with ``c_nominal + A delta >= s top`` over the unit ball, by tangent cuts.

    The LP with the ball replaced by its tangent half-spaces bounds ``s`` from above;
    normalizing the LP's ``delta`` onto the ball gives a feasible point and a lower bound.
    """
    A, c_nom = U.A, U.c_nominal
    n, q = A.shape
    mask = top > TAU
    cover = np.hstack([-A[mask], top[mask][:, None]])
    obj = np.concatenate([np.zeros(q), [1.0]])
    free = np.full(q + 1, -np.inf)
    cuts = [row for row in np.vstack([np.eye(q), -np.eye(q)])]
    best_delta, best_s = np.zeros(q), float(np.min(c_nom[mask] / top[mask]))
    for _ in range(max_rounds):
        rows = np.vstack([cover, np.hstack([np.array(cuts), np.zeros((len(cuts), 1))])])
        rhs = np.concatenate([c_nom[mask], np.ones(len(cuts))])
        res = lp_solve(LpProblem(obj, rows, rhs, ("<=",) * rows.shape[0], free, None, maximize=True))
        if not res.optimal:
            raise NumericalError(f"best-t LP ended with status {res.status.value}")
        delta = res.x[:q]
        nrm = np.linalg.norm(delta)
        cand = delta / max(nrm, 1.0)
        s_feas = float(np.min((c_nom + A @ cand)[mask] / top[mask]))
        if s_feas > best_s:
            best_delta, best_s = cand, s_feas
        if res.objective - best_s <= tol * (1.0 + abs(best_s)) or nrm <= 1.0:
            break
        cuts.append(delta / nrm)
    return best_delta


def best_t_scenario(U) -> tuple[np.ndarray, float]:
    """Scenario ``c`` in ``U`` minimizing ``t = max_i max_U c_i / c_i``."""
    top = coordinate_max(U)
    if top.max(initial=0.0) <= TAU:
        raise ValidationError("every scenario is zero; the ratio is undefined")
    n = U.dim
    if isinstance(U, POLYHEDRAL) or isinstance(U, VPolytope):
        if isinstance(U, VPolytope):
            V = U.vertices
            K = V.shape[0]
            obj = np.concatenate([np.zeros(K), [1.0]])
            rows = np.vstack([np.hstack([-V.T, top[:, None]]), np.concatenate([np.ones(K), [0.0]])[None, :]])
            rhs = np.concatenate([np.zeros(n), [1.0]])
            res = lp_solve(LpProblem(obj, rows, rhs, ("<=",) * n + ("=",), maximize=True))
            c = res.x[:K] @ V
        else:
            c_nom, A, b = U.hform()
            m = A.shape[0]
            obj = np.concatenate([np.zeros(n), [1.0]])
            rows = np.vstack([np.hstack([-np.eye(n), top[:, None]]), np.hstack([A, np.zeros((m, 1))])])
            rhs = np.concatenate([c_nom, b])
            res = lp_solve(LpProblem(obj, rows, rhs, ("<=",) * (n + m), maximize=True))
            c = c_nom + res.x[:n]
    elif isinstance(U, Ellipsoid):
        c = U.c_nominal + U.A @ _ellipsoid_best_t(U, top)
    else:
        raise UnsupportedError(f"unknown family {type(U).__name__}")
    return c, _scenario_ratio(U, c)


# --------------------------------------------------------------------------- multi-budget scheme


def fptas(instance: Instance, eps: float) -> ApproxResult:
    """Enumerate the budget duals on an ``eps`` grid and solve a capped problem for each."""
    U = instance.uncertainty
    st = instance.structure
    if not isinstance(U, MultiBudget):
        raise UnsupportedError("the grid scheme needs a multi-budget uncertainty set")
    if not isinstance(st, (Selection, RepSelection, ShortestPath, AllOnes)):
        raise UnsupportedError(f"no capped solver for {type(st).__name__}")
    units = grid_units(eps)
    grid = [k / units for k in range(units + 1)]
    member = np.zeros((len(U.subsets), instance.n))
    for j, s in enumerate(U.subsets):
        member[j, list(s)] = 1.0
    best = None
    for u in itertools.product(grid, repeat=len(U.subsets)):
        u = np.array(u)
        d = np.minimum(u @ member, 1.0)
        try:
            sol = solve_capped(CappedSubproblem(st, instance.C, U.c_nominal, d), eps)
        except InfeasibleError:
            continue
        total = sol.value + float(u @ U.gammas)
        if best is None or total < best[0]:
            best = (total, sol, u)
    total, sol, u = best
    return ApproxResult(sol.x, evaluate(instance, sol.x).value, 1.0 + eps, None, total, sol.y, {"u": u})


# --------------------------------------------------------------------------- ellipsoids


def _l1_model(instance: Instance) -> CompactModel:
    U = instance.uncertainty
    n = instance.n
    q = U.A.shape[1]
    ls = instance.linear_system()
    H = ls.H
    z0 = np.zeros((H.shape[0], q))
    rows = np.vstack([
        np.hstack([H, H, z0]),
        np.hstack([np.eye(n), np.eye(n), np.zeros((n, q))]),
        np.hstack([np.zeros((q, n)), -U.A.T, np.eye(q)]),
        np.hstack([np.zeros((q, n)), U.A.T, np.eye(q)]),
    ])
    rhs = np.concatenate([ls.g, np.ones(n), np.zeros(2 * q)])
    senses = tuple(ls.senses) + ("<=",) * n + (">=",) * (2 * q)
    c = np.concatenate([instance.C, U.c_nominal, np.ones(q)])
    k = 2 * n + q
    return CompactModel("l1", instance, c, rows, rhs, senses, np.zeros(k), np.full(k, np.inf))


def ellipsoid_l1_approx(instance: Instance) -> ApproxResult:
    """Replace ``||A^T y||_2`` by ``||A^T y||_1`` and solve the resulting MIP."""
    U = instance.uncertainty
    if not isinstance(U, Ellipsoid):
        raise UnsupportedError("needs an ellipsoidal uncertainty set")
    rep = branch_and_bound(_l1_model(instance), np.arange(instance.n))
    x = np.round(rep.x)
    guarantee = math.sqrt(U.A.shape[1])
    return ApproxResult(x, evaluate(instance, x).value, guarantee, None, rep.value, rep.y)


def ellipsoid_nonneg_approx(instance: Instance) -> ApproxResult:
    """For entrywise nonnegative ``A`` the l1 model is a nominal two-stage problem."""
    U = instance.uncertainty
    if not isinstance(U, Ellipsoid):
        raise UnsupportedError("needs an ellipsoidal uncertainty set")
    if np.any(U.A < -TAU):
        raise ValidationError("A must be entrywise nonnegative")
    c_hat = U.c_nominal + U.A.sum(axis=1)
    sol = two_stage(instance, c_hat)
    return ApproxResult(sol.x, evaluate(instance, sol.x).value, math.sqrt(U.A.shape[1]), None, sol.value, sol.y)


# --------------------------------------------------------------------------- LP rounding


def round_selection(instance: Instance) -> ApproxResult:
    """Round the relaxation of a selection instance, doubling the fractional recourse."""
    st = instance.structure
    if not isinstance(st, Selection):
        raise UnsupportedError("needs a selection structure")
    p = st.p
    model, rel = _root(instance)
    _, y_rel, _ = model.split(rel.point)
    order = np.argsort(instance.C, kind="stable")
    ys = np.clip(y_rel[order], 0.0, 1.0)
    n = ys.size

    xs = np.zeros(n)
    left = p - ys.sum()
    for k in range(n):
        xs[k] = max(min(left, 1.0 - ys[k]), 0.0)
        left -= xs[k]
    tol = 1e-6
    assert abs((xs + ys).sum() - p) <= tol, "greedy first-stage mass does not add up to p"
    pos = np.flatnonzero(xs > 1e-9)
    ell = int(pos[-1]) if pos.size else -1
    assert np.all(np.abs(xs[:max(ell, 0)] + ys[:max(ell, 0)] - 1.0) <= tol), "items before the split are not saturated"

    xr, yr = np.zeros(n), np.zeros(n)
    left = float(p)
    for k in range(max(ell, 0)):
        if xs[k] >= 0.5:
            xr[k] = 1.0
        else:
            yr[k] = 1.0
        left -= 1.0
    if ell >= 0:
        if xs[ell] >= 0.5:
            xr[ell] = 1.0
            left -= 1.0
        else:
            yr[ell] = min(1.0, 2.0 * ys[ell])
            left -= yr[ell]
    for k in range(ell + 1, n):
        yr[k] = max(min(1.0, 2.0 * ys[k], left), 0.0)
        left -= yr[k]
    assert abs((xr + yr).sum() - p) <= tol, "rounded solution does not select p items"

    x = np.zeros(n)
    y = np.zeros(n)
    x[order], y[order] = xr, yr
    model_value = float(instance.C @ x + support_max(instance.uncertainty, y)[0])
    x_greedy = np.zeros(n)
    x_greedy[order] = xs
    extra = {"x_relaxed": x_greedy, "y_relaxed": y_rel, "split_index": int(order[ell]) if ell >= 0 else None}
    return ApproxResult(x, evaluate(instance, x).value, 2.0, rel.bound, model_value, y, extra)


def round_rs(instance: Instance) -> ApproxResult:
    """Round the relaxation of a representatives-selection instance block by block."""
    st = instance.structure
    if not isinstance(st, RepSelection):
        raise UnsupportedError("needs a representatives-selection structure")
    model, rel = _root(instance)
    x_rel, y_rel, _ = model.split(rel.point)
    n = instance.n
    x, y = np.zeros(n), np.zeros(n)
    for blk in st.partition:
        blk = np.array(blk)
        if x_rel[blk].sum() >= 0.5:
            x[int(blk[np.argmin(instance.C[blk])])] = 1.0
        else:
            y[blk] = y_rel[blk] / y_rel[blk].sum()
    model_value = float(instance.C @ x + support_max(instance.uncertainty, y)[0])
    return ApproxResult(x, evaluate(instance, x).value, 2.0, rel.bound, model_value, y)


# --------------------------------------------------------------------------- budgeted representatives


def rs_hp0_exact(instance: Instance) -> TwoStageSolution:
    """Exact algorithm for representatives selection under a single budget.

    For a fixed dual price ``pi`` of the budget, every block is solved on its own:
    either buy its cheapest item now, or fill unit mass with second-stage
    purchases where the first ``pi`` of each item costs ``c_j`` and the rest
    ``c_j + d_j``.  Only ``pi in {0, 1} U {1/k}`` needs to be tried.
    """
    st, U = instance.structure, instance.uncertainty
    if not isinstance(st, RepSelection) or not isinstance(U, Budgeted):
        raise UnsupportedError("needs representatives selection with a budgeted set")
    n = instance.n
    c_nom, d, gamma = U.c_nominal, U.d, U.gamma
    prices = sorted({0.0, 1.0} | {1.0 / k for k in range(1, n + 1)})
    best = None
    for pi in prices:
        total = gamma * pi
        x, y = np.zeros(n), np.zeros(n)
        for blk in st.partition:
            blk = list(blk)
            cheap = blk[int(np.argmin(instance.C[blk]))]
            modes = [(c_nom[j], 0, j, pi) for j in blk] + [(c_nom[j] + d[j], 1, j, 1.0 - pi) for j in blk]
            modes.sort(key=lambda m: (m[0], m[1], m[2]))
            need, spend = 1.0, 0.0
            take = np.zeros(n)
            for rate, _, j, cap in modes:
                amt = min(cap, need)
                if amt <= 0:
                    continue
                take[j] += amt
                spend += rate * amt
                need -= amt
                if need <= 1e-15:
                    break
            if instance.C[cheap] <= spend:
                x[cheap] = 1.0
                total += instance.C[cheap]
            else:
                y += take
                total += spend
        if best is None or total < best[0] - 1e-12:
            best = (total, x, y, pi)
    total, x, y, pi = best
    _, cert = support_max(U, y)
    return TwoStageSolution(x, y, float(total), ScenarioCertificate(cert.c, cert.attained))
