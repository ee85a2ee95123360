"""Compact single-level models, exact evaluation of first-stage decisions, and branch-and-bound.

Variables of every compact model are laid out as ``[x (n), y (n), aux]`` where
``aux`` is the dual vector ``u`` of the H-form (polyhedral families), the single
epigraph variable ``w`` (vertex hulls), or empty (ellipsoids, whose objective
carries the extra term ``||A^T y||``).
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, NoRecourseError, NumericalError, UnsupportedError, ValidationError
from .frankwolfe import NormObjective, cutting_plane_polish, frank_wolfe
from .model import AllOnes, Instance, RepSelection, Selection, ShortestPath, SpanningTree, TwoStageSolution
from .simplex import LpProblem, LpStatus, lp_solve
from .uncertainty import POLYHEDRAL, Ellipsoid, ScenarioCertificate, VPolytope, support_max

FW_TOL = 1e-6
FW_EVAL_ITER = 2_000
FW_NODE_ITER = 400
INT_TOL = 1e-6
MAX_EXACT_N = 30


@dataclass(frozen=True, eq=False)
class CompactModel:
    kind: str  # "polyhedral_dual", "vertex_epigraph" or "ellipsoid_norm"
    instance: Instance
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: tuple
    lb: np.ndarray
    ub: np.ndarray
    norm_map: np.ndarray | None = None
    mu: float = 0.0
    cert_rows: slice | None = None

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def num_vars(self) -> int:
        return self.c.size

    def split(self, v):
        n = self.n
        return v[:n], v[n : 2 * n], v[2 * n :]


def build_compact_model(instance: Instance) -> CompactModel:
    n = instance.n
    ls = instance.linear_system()
    U = instance.uncertainty
    H = ls.H
    rows = [np.hstack([H, H]), np.hstack([np.eye(n), np.eye(n)])]
    rhs = [ls.g, np.ones(n)]
    senses = list(ls.senses) + ["<="] * n
    if isinstance(U, POLYHEDRAL):
        c_nom, A, b = U.hform()
        m = A.shape[0]
        base = [np.hstack([r, np.zeros((r.shape[0], m))]) for r in rows]
        dual_rows = np.hstack([np.zeros((n, n)), -np.eye(n), A.T])
        start = sum(r.shape[0] for r in base)
        return CompactModel(
            "polyhedral_dual", instance,
            np.concatenate([instance.C, c_nom, b]),
            np.vstack(base + [dual_rows]), np.concatenate(rhs + [np.zeros(n)]),
            tuple(senses + [">="] * n),
            np.zeros(2 * n + m), np.full(2 * n + m, np.inf),
            cert_rows=slice(start, start + n),
        )
    if isinstance(U, VPolytope):
        V = U.vertices
        K = V.shape[0]
        base = [np.hstack([r, np.zeros((r.shape[0], 1))]) for r in rows]
        epi = np.hstack([np.zeros((K, n)), -V, np.ones((K, 1))])
        start = sum(r.shape[0] for r in base)
        lb = np.zeros(2 * n + 1)
        lb[-1] = -np.inf
        return CompactModel(
            "vertex_epigraph", instance,
            np.concatenate([instance.C, np.zeros(n), [1.0]]),
            np.vstack(base + [epi]), np.concatenate(rhs + [np.zeros(K)]),
            tuple(senses + [">="] * K), lb, np.full(2 * n + 1, np.inf),
            cert_rows=slice(start, start + K),
        )
    if isinstance(U, Ellipsoid):
        M = np.hstack([np.zeros((U.A.shape[1], n)), U.A.T])
        mu = 1e-7 * (1.0 + np.linalg.norm(U.A))
        return CompactModel(
            "ellipsoid_norm", instance,
            np.concatenate([instance.C, U.c_nominal]),
            np.vstack(rows), np.concatenate(rhs), tuple(senses),
            np.zeros(2 * n), np.full(2 * n, np.inf), norm_map=M, mu=mu,
        )
    raise UnsupportedError(f"no compact model for {type(U).__name__}")


# --------------------------------------------------------------------------- linear oracle


class FeasiblePolytope:
    """Linear minimization over ``{(x, y) >= 0 : H(x+y) ~ g, x + y <= 1}`` with 0/1 fixings.

    The polytope is integral for every supported structure, so each vertex is a
    binary pair and the oracle can pick a cheapest ``s = x + y`` combinatorially.
    """

    def __init__(self, instance: Instance, lo, hi):
        self.instance = instance
        n = instance.n
        self.n = n
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        x_lo, y_lo = lo[:n], lo[n : 2 * n]
        x_hi, y_hi = np.minimum(hi[:n], 1.0), np.minimum(hi[n : 2 * n], 1.0)
        self.allow_x = x_hi > 0.5
        self.allow_y = (y_hi > 0.5) & (x_lo < 0.5)
        self.allow_x &= y_lo < 0.5
        self.allow_out = (x_lo < 0.5) & (y_lo < 0.5)
        self.must = ~self.allow_out
        self.forbid = ~(self.allow_x | self.allow_y)
        self._lp = None

    def _choose(self, gx, gy):
        cost_in = np.where(self.allow_x, gx, np.inf)
        cost_in = np.minimum(cost_in, np.where(self.allow_y, gy, np.inf))
        use_x = self.allow_x & (~self.allow_y | (gx <= gy))
        return cost_in, use_x

    def lmo(self, g) -> np.ndarray:
        n = self.n
        gx, gy = g[:n], g[n : 2 * n]
        cost_in, use_x = self._choose(gx, gy)
        if np.any(self.must & self.forbid):
            raise NoRecourseError("fixings are contradictory")
        s = self._pick(cost_in)
        out = np.zeros(2 * n)
        out[:n] = s * use_x
        out[n:] = s * ~use_x
        return out

    def _pick(self, cost_in) -> np.ndarray:
        st = self.instance.structure
        n = self.n
        s = np.zeros(n)
        if isinstance(st, (Selection, AllOnes)):
            p = st.p if isinstance(st, Selection) else n
            s[self.must] = 1.0
            need = p - int(self.must.sum())
            opt = np.flatnonzero(~self.must & ~self.forbid)
            if need < 0 or need > opt.size:
                raise NoRecourseError("no feasible completion")
            s[opt[np.argsort(cost_in[opt], kind="stable")[:need]]] = 1.0
            return s
        if isinstance(st, RepSelection):
            for blk in st.partition:
                blk = np.array(blk)
                forced = blk[self.must[blk]]
                if forced.size > 1:
                    raise NoRecourseError("two forced items in one block")
                if forced.size == 1:
                    s[forced[0]] = 1.0
                    continue
                cand = blk[~self.forbid[blk]]
                if cand.size == 0:
                    raise NoRecourseError("block has no admissible item")
                s[cand[int(np.argmin(cost_in[cand]))]] = 1.0
            return s
        if isinstance(st, ShortestPath):
            ls = self.instance.linear_system()
            c = np.where(self.forbid, 0.0, cost_in)
            res = lp_solve(LpProblem(c, ls.H, ls.g, ls.senses, self.must.astype(float), np.where(self.forbid, 0.0, 1.0)))
            if res.status is LpStatus.INFEASIBLE:
                raise NoRecourseError("no s-t flow respects the fixings")
            if not res.optimal:
                raise NumericalError("flow oracle LP failed")
            return np.round(res.x)
        raise UnsupportedError(f"no linear oracle for {type(st).__name__}")


# --------------------------------------------------------------------------- relaxations


@dataclass(frozen=True, eq=False)
class Relaxation:
    """``duals`` are row duals for LP models and the certifying ``delta`` for the norm model."""

    bound: float
    value: float
    point: np.ndarray
    duals: np.ndarray | None = None


def solve_relaxation(model: CompactModel, lb=None, ub=None, *, fw_iter: int = FW_EVAL_ITER, fw_tol: float = FW_TOL,
                     cutoff: float = np.inf):
    """Continuous relaxation under the given variable bounds; ``None`` when infeasible."""
    lb = model.lb if lb is None else lb
    ub = model.ub if ub is None else ub
    if model.norm_map is None:
        res = lp_solve(LpProblem(model.c, model.A, model.b, model.senses, lb, ub))
        if res.status is LpStatus.INFEASIBLE:
            return None
        if not res.optimal:
            raise NumericalError(f"relaxation LP ended with status {res.status.value}")
        return Relaxation(res.objective, res.objective, res.x, res.duals)
    poly = FeasiblePolytope(model.instance, lb, ub)
    obj = NormObjective(model.c, model.norm_map, model.mu)
    try:
        fw = frank_wolfe(obj, poly.lmo, tol=fw_tol, max_iter=fw_iter, cutoff=cutoff)
    except NoRecourseError:
        return None
    if fw.gap <= fw_tol * (1.0 + abs(fw.value)) or fw.lower >= cutoff:
        return Relaxation(fw.lower, fw.value, fw.point, fw.dual)
    cp = cutting_plane_polish(obj, model.A, model.b, model.senses, lb, ub, [fw.point], tol=fw_tol, cutoff=cutoff)
    if cp is None:
        return None
    point, value = (cp.point, cp.value) if cp.value < fw.value else (fw.point, fw.value)
    bound, dual = (cp.lower, cp.dual) if cp.lower >= fw.lower else (fw.lower, fw.dual)
    return Relaxation(bound, value, point, dual)


def relaxation_value(instance: Instance) -> float:
    """Optimal value of the compact model with ``x`` relaxed to ``[0, 1]``."""
    rel = solve_relaxation(build_compact_model(instance))
    if rel is None:
        raise InfeasibleError("relaxation is infeasible")
    return rel.value


# --------------------------------------------------------------------------- evaluation


@dataclass(frozen=True, eq=False)
class EvalResult:
    """``y`` is a cheapest binary recourse against ``worst``; ``y_mix`` is the
    (possibly fractional) recourse mixture that the adversary cannot exploit."""

    value: float
    y: np.ndarray
    worst: ScenarioCertificate
    y_mix: np.ndarray | None = None


def _check_binary(instance: Instance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != instance.n:
        raise ValidationError("first-stage vector has the wrong length")
    if np.any(np.abs(x - np.round(x)) > 1e-9) or np.any((x < 0) | (x > 1)):
        raise ValidationError("first-stage vector must be binary")
    return np.round(x)


def evaluate(instance: Instance, x) -> EvalResult:
    """Robust cost of the first-stage decision ``x``: ``C x + max_c min_y c y``."""
    from .deterministic import incremental

    x = _check_binary(instance, x)
    ev = _evaluate_mix(instance, x)
    if ev.y_mix is None:
        return ev
    _, y = incremental(instance.structure, x, ev.worst.c)
    return EvalResult(ev.value, y, ScenarioCertificate(ev.worst.c, float(ev.worst.c @ y)), ev.y_mix)


def _evaluate_mix(instance: Instance, x: np.ndarray) -> EvalResult:
    n = instance.n
    if isinstance(instance.structure, SpanningTree):
        from .oracle import evaluate_by_enumeration

        return evaluate_by_enumeration(instance, x)
    model = build_compact_model(instance)
    lb, ub = model.lb.copy(), model.ub.copy()
    lb[:n] = ub[:n] = x
    rel = solve_relaxation(model, lb, ub, fw_iter=FW_EVAL_ITER)
    if rel is None:
        raise NoRecourseError("x cannot be completed to a feasible solution")
    _, y, _ = model.split(rel.point)
    U = instance.uncertainty
    if model.kind == "polyhedral_dual":
        c = U.hform()[0] + np.maximum(rel.duals[model.cert_rows], 0.0)
    elif model.kind == "vertex_epigraph":
        lam = np.maximum(rel.duals[model.cert_rows], 0.0)
        lam = lam / lam.sum() if lam.sum() > 0 else np.eye(lam.size)[0]
        c = lam @ U.vertices
    else:
        c = U.c_nominal + U.A @ rel.duals
    return EvalResult(rel.value, y, ScenarioCertificate(c, float(c @ y)), y)


eval = evaluate  # noqa: A001  (operation name used throughout the docs)


# --------------------------------------------------------------------------- branch and bound


@dataclass(frozen=True, eq=False)
class BnBReport:
    value: float
    point: np.ndarray
    x: np.ndarray
    y: np.ndarray
    aux: np.ndarray
    nodes: int
    root_bound: float


def branch_and_bound(model: CompactModel, int_vars, leaf_value=None, *, node_limit: int = 1_000_000,
                     fw_iter: int = FW_NODE_ITER) -> BnBReport:
    """Best-first branch-and-bound over the binary variables ``int_vars``.

    Polyhedral models are solved exactly at every node.  For the norm model the
    node bound is the Frank-Wolfe lower bound, and fully fixed assignments are
    priced with ``leaf_value(assignment)``.
    """
    int_vars = np.asarray(int_vars, dtype=int)
    is_lp = model.norm_map is None
    if not is_lp and leaf_value is None:
        raise ValidationError("norm models need a leaf evaluator")
    lb0 = model.lb.copy()
    ub0 = model.ub.copy()
    ub0[int_vars] = np.minimum(ub0[int_vars], 1.0)
    counter = itertools.count()
    root = solve_relaxation(model, lb0, ub0, fw_iter=fw_iter)
    if root is None:
        raise InfeasibleError("root relaxation is infeasible")
    heap = [(root.bound, next(counter), lb0, ub0, root)]
    best_val, best_pt = np.inf, None
    cache: dict = {}
    nodes = 1

    def prunable(bound):
        return bound >= best_val - 1e-9 * (1.0 + abs(best_val))

    def leaf(assign, point):
        key = tuple(int(a) for a in assign)
        if key not in cache:
            cache[key] = leaf_value(np.array(key, dtype=float))
        val, pt = cache[key]
        return val, pt

    while heap:
        bound, _, lb, ub, rel = heapq.heappop(heap)
        if prunable(bound):
            continue
        vals = rel.point[int_vars]
        frac = np.abs(vals - np.round(vals))
        if frac.max(initial=0.0) <= INT_TOL:
            if is_lp:
                if rel.value < best_val:
                    best_val, best_pt = rel.value, rel.point
                continue
            val, pt = leaf(np.round(vals), rel.point)
            if val < best_val:
                best_val, best_pt = val, pt
            free = int_vars[lb[int_vars] < ub[int_vars]]
            if free.size == 0 or prunable(bound):
                continue
            j = int(free[0])
        else:
            dist = np.abs(vals - 0.5)
            j = int(int_vars[int(np.argmin(dist))])
        for side in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = side
            nodes += 1
            if nodes > node_limit:
                raise NumericalError(f"branch-and-bound node limit {node_limit} exceeded")
            cutoff = best_val - 1e-9 * (1.0 + abs(best_val)) if np.isfinite(best_val) else np.inf
            child = solve_relaxation(model, clb, cub, fw_iter=fw_iter, cutoff=cutoff)
            if child is None or prunable(child.bound):
                continue
            heapq.heappush(heap, (child.bound, next(counter), clb, cub, child))
    if best_pt is None:
        raise InfeasibleError("no integral solution found")
    x, y, aux = model.split(best_pt)
    return BnBReport(float(best_val), best_pt, x.copy(), y.copy(), aux.copy(), nodes, float(root.bound))


def bnb_solve(instance: Instance, *, max_n: int = MAX_EXACT_N, node_limit: int = 1_000_000) -> BnBReport:
    """Exact robust two-stage optimum via branch-and-bound on the first-stage variables."""
    n = instance.n
    if n > max_n:
        raise UnsupportedError(f"exact solver is capped at n={max_n}")
    if isinstance(instance.structure, SpanningTree):
        raise UnsupportedError("no compact model for spanning trees; use the oracle")
    model = build_compact_model(instance)

    def leaf_value(xa):
        try:
            ev = _evaluate_mix(instance, xa)
        except NoRecourseError:
            return np.inf, None
        return ev.value, np.concatenate([xa, ev.y])

    return branch_and_bound(model, np.arange(n), leaf_value, node_limit=node_limit)


def solve_exact(instance: Instance, *, max_n: int = MAX_EXACT_N, node_limit: int = 1_000_000) -> TwoStageSolution:
    """Exact solution; ``y`` is the binary recourse against a worst-case scenario for ``x``."""
    rep = bnb_solve(instance, max_n=max_n, node_limit=node_limit)
    x = np.round(rep.x)
    ev = evaluate(instance, x)
    return TwoStageSolution(x, ev.y, rep.value, ev.worst)
