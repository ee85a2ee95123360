"""Brute-force reference solver for small instances.

Every feasible solution ``z`` is enumerated explicitly; every subset ``x <= z`` is a
feasible first-stage decision with recourse ``z - x``.  For a fixed ``x`` the
adversary maximizes ``min_{y in R(x)} c @ y`` over ``U`` directly:

* polyhedral and vertex-hull sets: one LP over ``(c, t)`` with a row per recourse vector;
* ellipsoids: ``min c_nominal @ y + ||A^T y||`` over the convex hull of the enumerated
  recourse vectors, by Frank-Wolfe on the weights with a cutting-plane finish.

None of this relies on the compact reformulations or on integrality of the
feasible-set description.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import NoRecourseError, NumericalError, UnsupportedError
from .frankwolfe import NormObjective, cutting_plane_polish, frank_wolfe
from .model import AllOnes, Instance, RepSelection, Selection, ShortestPath, SpanningTree, build_linear_system
from .simplex import LpProblem, lp_solve
from .uncertainty import POLYHEDRAL, Ellipsoid, ScenarioCertificate, VPolytope, support_max

ORACLE_LIMIT = 12


@dataclass(frozen=True, eq=False)
class OracleReport:
    opt: float
    x: np.ndarray
    y: np.ndarray
    worst: ScenarioCertificate
    table: dict | None
    method: str
    evaluated: int


def feasible_solutions(structure, n: int) -> np.ndarray:
    """All binary vectors of the feasible set, one per row."""
    rows = []
    if isinstance(structure, Selection):
        for comb in itertools.combinations(range(n), structure.p):
            z = np.zeros(n)
            z[list(comb)] = 1
            rows.append(z)
    elif isinstance(structure, RepSelection):
        for pick in itertools.product(*structure.partition):
            z = np.zeros(n)
            z[list(pick)] = 1
            rows.append(z)
    elif isinstance(structure, ShortestPath):
        ls = build_linear_system(structure, n)
        allz = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(float)
        ok = np.all(np.abs(allz @ ls.H.T - ls.g) < 1e-9, axis=1)
        rows = list(allz[ok])
    elif isinstance(structure, SpanningTree):
        for comb in itertools.combinations(range(n), structure.nodes - 1):
            parent = list(range(structure.nodes))

            def find(a):
                while parent[a] != a:
                    a = parent[a]
                return a

            acyclic = True
            for k in comb:
                ra, rb = find(structure.edges[k][0]), find(structure.edges[k][1])
                if ra == rb:
                    acyclic = False
                    break
                parent[ra] = rb
            if acyclic:
                z = np.zeros(n)
                z[list(comb)] = 1
                rows.append(z)
    elif isinstance(structure, AllOnes):
        rows = [np.ones(n)]
    else:
        raise UnsupportedError(f"cannot enumerate {type(structure).__name__}")
    return np.array(rows, dtype=float).reshape(-1, n)


def recourse_table(structure, n: int) -> dict:
    """Map each first-stage tuple ``x`` to the array of its binary completions ``y``."""
    table: dict = {}
    for z in feasible_solutions(structure, n):
        ones = np.flatnonzero(z)
        for r in range(ones.size + 1):
            for sub in itertools.combinations(ones, r):
                x = np.zeros(n)
                x[list(sub)] = 1
                table.setdefault(tuple(int(v) for v in x), []).append(z - x)
    return {k: np.unique(np.array(v), axis=0) for k, v in table.items()}


def _any_point(U) -> np.ndarray:
    if isinstance(U, VPolytope):
        return U.vertices[0]
    if isinstance(U, Ellipsoid):
        return U.c_nominal
    return support_max(U, np.zeros(U.dim))[1].c


def adversary_value(U, Y: np.ndarray) -> tuple[float, np.ndarray, str]:
    """``max_{c in U} min_r c @ Y[r]`` and a maximizing scenario."""
    R, n = Y.shape
    if isinstance(U, POLYHEDRAL):
        c_nom, A, b = U.hform()
        m = A.shape[0]
        obj = np.concatenate([np.zeros(n), [1.0]])
        rows = np.vstack([
            np.hstack([-Y, np.ones((R, 1))]),
            np.hstack([A, np.zeros((m, 1))]),
        ])
        rhs = np.concatenate([Y @ c_nom, b])
        lb = np.concatenate([np.zeros(n), [-np.inf]])
        res = lp_solve(LpProblem(obj, rows, rhs, ("<=",) * (R + m), lb, None, maximize=True))
        if not res.optimal:
            raise NumericalError(f"adversary LP ended with status {res.status.value}")
        return res.objective, c_nom + res.x[:n], "adversary LP over enumerated recourse"
    if isinstance(U, VPolytope):
        V = U.vertices
        K = V.shape[0]
        obj = np.concatenate([np.zeros(K), [1.0]])
        rows = np.vstack([
            np.hstack([-(Y @ V.T), np.ones((R, 1))]),
            np.concatenate([np.ones(K), [0.0]])[None, :],
        ])
        rhs = np.concatenate([np.zeros(R), [1.0]])
        lb = np.concatenate([np.zeros(K), [-np.inf]])
        res = lp_solve(LpProblem(obj, rows, rhs, ("<=",) * R + ("=",), lb, None, maximize=True))
        if not res.optimal:
            raise NumericalError(f"adversary LP ended with status {res.status.value}")
        return res.objective, res.x[:K] @ V, "mixed-scenario LP over enumerated recourse"
    if isinstance(U, Ellipsoid):
        # work in convex-combination weights over the enumerated recourse vectors
        obj = NormObjective(Y @ U.c_nominal, U.A.T @ Y.T, 1e-7 * (1.0 + np.linalg.norm(U.A)))
        eye = np.eye(R)
        fw = frank_wolfe(obj, lambda g: eye[int(np.argmin(g))], tol=1e-8, max_iter=2_000)
        value, delta = fw.value, fw.dual
        if fw.gap > 1e-8 * (1.0 + abs(fw.value)):
            cp = cutting_plane_polish(obj, np.ones((1, R)), np.ones(1), ("=",), np.zeros(R), np.full(R, np.inf),
                                      [fw.point], tol=1e-8)
            value = min(value, cp.value)
            if cp.lower >= fw.lower:
                delta = cp.dual
        return value, U.c_nominal + U.A @ delta, "convex minimization over hull of enumerated recourse"
    raise UnsupportedError(f"unknown uncertainty family {type(U).__name__}")


def evaluate_by_enumeration(instance: Instance, x, *, table: dict | None = None):
    from .exact import EvalResult

    x = np.round(np.asarray(x, dtype=float))
    table = recourse_table(instance.structure, instance.n) if table is None else table
    key = tuple(int(v) for v in x)
    if key not in table:
        raise NoRecourseError("x cannot be completed to a feasible solution")
    Y = table[key]
    val, c, _ = adversary_value(instance.uncertainty, Y)
    y = Y[int(np.argmin(Y @ c))]
    return EvalResult(float(instance.C @ x + val), y, ScenarioCertificate(c, float(c @ y)))


def oracle_solve(instance: Instance, *, limit: int = ORACLE_LIMIT, full_table: bool = False) -> OracleReport:
    """Exact optimum by enumeration; refuses instances with more than ``limit`` items."""
    n = instance.n
    if n > limit:
        raise UnsupportedError(f"oracle is limited to n <= {limit}")
    U = instance.uncertainty
    table = recourse_table(instance.structure, n)
    keys = sorted(table)
    C = instance.C
    if isinstance(U, VPolytope):
        lower = {k: C @ np.array(k) + max(float((table[k] @ v).min()) for v in U.vertices) for k in keys}
    else:
        ref = _any_point(U)
        lower = {k: C @ np.array(k) + float((table[k] @ ref).min()) for k in keys}
    order = sorted(keys, key=lambda k: (lower[k], k))
    best, best_key, best_c, method = np.inf, None, None, ""
    values = {} if full_table else None
    evaluated = 0
    for k in order:
        if not full_table and lower[k] >= best - 1e-12 * (1.0 + abs(best)):
            break
        val, c, method = adversary_value(U, table[k])
        val += float(C @ np.array(k))
        evaluated += 1
        if values is not None:
            values[k] = val
        if val < best:
            best, best_key, best_c = val, k, c
    x = np.array(best_key, dtype=float)
    Y = table[best_key]
    y = Y[int(np.argmin(Y @ best_c))]
    return OracleReport(float(best), x, y, ScenarioCertificate(best_c, float(best_c @ y)), values, method, evaluated)
