"""Nominal solvers, the two-stage problem for a fixed scenario, and recourse completion."""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import NoRecourseError, NumericalError, UnsupportedError, ValidationError
from .model import (
    AllOnes,
    Instance,
    RepSelection,
    Selection,
    ShortestPath,
    SpanningTree,
    TwoStageSolution,
    build_linear_system,
)
from .simplex import LpProblem, LpStatus, lp_solve
from .uncertainty import TAU, ScenarioCertificate


@dataclass(frozen=True, eq=False)
class DetSolution:
    z: np.ndarray
    value: float


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _dijkstra_path(structure: ShortestPath, costs: np.ndarray) -> np.ndarray:
    adj = [[] for _ in range(structure.nodes)]
    for k, (a, b) in enumerate(structure.arcs):
        adj[a].append((b, k))
    dist = [np.inf] * structure.nodes
    pred = [-1] * structure.nodes
    dist[structure.s] = 0.0
    heap = [(0.0, structure.s)]
    done = [False] * structure.nodes
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, k in adj[u]:
            nd = du + costs[k]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = k
                heapq.heappush(heap, (nd, v))
    if not np.isfinite(dist[structure.t]):
        raise NoRecourseError("t is unreachable from s")
    z = np.zeros(len(structure.arcs))
    v = structure.t
    while v != structure.s:
        k = pred[v]
        z[k] = 1.0
        v = structure.arcs[k][0]
    return z


def _kruskal(structure: SpanningTree, costs: np.ndarray, forced=None) -> np.ndarray:
    uf = _UnionFind(structure.nodes)
    z = np.zeros(len(structure.edges))
    if forced is not None:
        for k in np.flatnonzero(forced > 0.5):
            a, b = structure.edges[k]
            if not uf.union(a, b):
                raise NoRecourseError("first-stage edges contain a cycle")
            z[k] = 1.0
    for k in np.lexsort((np.arange(len(costs)), costs)):
        if z[k]:
            continue
        a, b = structure.edges[k]
        if uf.union(a, b):
            z[k] = 1.0
    if z.sum() != structure.nodes - 1:
        raise NoRecourseError("graph is disconnected")
    return z


def solve_p(structure, costs) -> DetSolution:
    """Minimum-cost feasible solution for nonnegative ``costs``."""
    costs = np.asarray(costs, dtype=float)
    n = costs.size
    if np.any(costs < -TAU):
        raise ValidationError("nominal solver expects nonnegative costs")
    if isinstance(structure, Selection):
        z = np.zeros(n)
        z[np.argsort(costs, kind="stable")[: structure.p]] = 1.0
    elif isinstance(structure, RepSelection):
        z = np.zeros(n)
        for blk in structure.partition:
            blk = list(blk)
            z[blk[int(np.argmin(costs[blk]))]] = 1.0
    elif isinstance(structure, ShortestPath):
        z = _dijkstra_path(structure, costs)
    elif isinstance(structure, SpanningTree):
        z = _kruskal(structure, costs)
    elif isinstance(structure, AllOnes):
        z = np.ones(n)
    else:
        raise UnsupportedError(f"unknown structure {type(structure).__name__}")
    return DetSolution(z, float(costs @ z))


def two_stage(instance: Instance, c) -> TwoStageSolution:
    """Best first/second stage split when the second-stage costs are known to be ``c``.

    Each item is bought in whichever stage is cheaper; ties go to the first stage.
    """
    c = np.asarray(c, dtype=float)
    C = instance.C
    merged = np.minimum(C, c)
    z = solve_p(instance.structure, merged).z
    first = C <= c
    x = z * first
    y = z - x
    return TwoStageSolution(x, y, float(C @ x + c @ y), ScenarioCertificate(c.copy(), float(c @ y)))


def _binary(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x - np.round(x)) > 1e-7) or np.any((x < -1e-7) | (x > 1 + 1e-7)):
        raise ValidationError("first-stage vector must be binary")
    return np.round(x)


def _flow_vectors_containing(structure: ShortestPath, x: np.ndarray):
    """Binary unit s-t flows z with z >= x (brute force, small graphs only)."""
    n = len(structure.arcs)
    if n > 22:
        raise NumericalError("too many arcs for recourse enumeration")
    ls = build_linear_system(structure, n)
    free = np.flatnonzero(x < 0.5)
    out = []
    for mask in range(1 << free.size):
        z = x.copy()
        for bit, k in enumerate(free):
            if mask >> bit & 1:
                z[k] = 1.0
        if np.allclose(ls.H @ z, ls.g):
            out.append(z)
    return out


def incremental(structure, x, c) -> tuple[float, np.ndarray]:
    """Cheapest second-stage completion ``y`` of the partial solution ``x`` under costs ``c``."""
    x = _binary(x)
    c = np.asarray(c, dtype=float)
    n = x.size
    if isinstance(structure, Selection):
        need = structure.p - int(x.sum())
        if need < 0:
            raise NoRecourseError("too many items fixed in the first stage")
        free = np.flatnonzero(x < 0.5)
        y = np.zeros(n)
        y[free[np.argsort(c[free], kind="stable")[:need]]] = 1.0
    elif isinstance(structure, RepSelection):
        y = np.zeros(n)
        for blk in structure.partition:
            blk = list(blk)
            taken = int(x[blk].sum())
            if taken > 1:
                raise NoRecourseError("block has more than one first-stage item")
            if taken == 0:
                y[blk[int(np.argmin(c[blk]))]] = 1.0
    elif isinstance(structure, ShortestPath):
        ls = build_linear_system(structure, n)
        res = lp_solve(LpProblem(c, ls.H, ls.g - ls.H @ x, ls.senses, np.zeros(n), 1.0 - x))
        if res.status is LpStatus.INFEASIBLE:
            raise NoRecourseError("first-stage arcs cannot be extended to an s-t flow")
        if not res.optimal:
            raise NumericalError("recourse LP did not terminate optimally")
        y = np.round(res.x)
        if np.abs(res.x - y).max(initial=0.0) > 1e-7:
            best = min(_flow_vectors_containing(structure, x), key=lambda z: float(c @ (z - x)))
            y = best - x
    elif isinstance(structure, SpanningTree):
        y = _kruskal(structure, c, forced=x) - x
    elif isinstance(structure, AllOnes):
        y = 1.0 - x
    else:
        raise UnsupportedError(f"unknown structure {type(structure).__name__}")
    return float(c @ y), y
