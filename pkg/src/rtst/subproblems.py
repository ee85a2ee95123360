"""Solvers for the capped two-stage problem

    min C x + c_nominal y   s.t.  x + y feasible,  x binary,  0 <= y <= d,

where ``d`` lies on a grid of step ``eps`` (so that ``1/eps`` is an integer).
These are the inner problems of the multi-budget approximation scheme.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, NumericalError, UnsupportedError, ValidationError
from .model import AllOnes, RepSelection, Selection, ShortestPath, build_linear_system, reachable

_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CappedSubproblem:
    structure: object
    C: np.ndarray
    c_nominal: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for name in ("C", "c_nominal", "d"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
        if np.any(self.d < -_TOL) or np.any(self.d > 1 + _TOL):
            raise ValidationError("caps must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class CappedSolution:
    value: float
    x: np.ndarray
    y: np.ndarray


def grid_units(eps: float) -> int:
    units = round(1.0 / eps)
    if units < 1 or abs(units * eps - 1.0) > 1e-9:
        raise ValidationError("eps must be 1/k for a positive integer k")
    return units


def _caps_in_units(d: np.ndarray, units: int) -> np.ndarray:
    scaled = d * units
    k = np.round(scaled)
    if np.any(np.abs(scaled - k) > 1e-7):
        raise ValidationError("caps are not aligned with the eps grid")
    return k.astype(int)


def capped_selection_dp(sub: CappedSubproblem, eps: float) -> CappedSolution:
    """Dynamic program over items; the state is the selected mass in units of ``eps``."""
    st = sub.structure
    n = sub.C.size
    p = st.p if isinstance(st, Selection) else n
    units = grid_units(eps)
    caps = _caps_in_units(sub.d, units)
    target = p * units
    cost = np.full(target + 1, np.inf)
    cost[0] = 0.0
    # choice[i][s] = units of y taken by item i when reaching mass s, or -1 for x_i = 1
    choices = []
    for i in range(n):
        new = cost.copy()
        pick = np.zeros(target + 1, dtype=int)
        if units <= target:
            cand = cost[: target + 1 - units] + sub.C[i]
            better = cand < new[units:]
            new[units:][better] = cand[better]
            pick[units:][better] = -1
        for k in range(1, min(caps[i], target) + 1):
            cand = cost[: target + 1 - k] + sub.c_nominal[i] * k / units
            better = cand < new[k:]
            new[k:][better] = cand[better]
            pick[k:][better] = k
        cost = new
        choices.append(pick)
    if not np.isfinite(cost[target]):
        raise InfeasibleError("caps leave no way to complete the selection")
    x, y = np.zeros(n), np.zeros(n)
    s = target
    for i in range(n - 1, -1, -1):
        k = choices[i][s]
        if k == -1:
            x[i] = 1.0
            s -= units
        elif k > 0:
            y[i] = k / units
            s -= k
    return CappedSolution(float(sub.C @ x + sub.c_nominal @ y), x, y)


def capped_rs_greedy(sub: CappedSubproblem) -> CappedSolution:
    """Per block: buy the cheapest item now, or fill unit mass greedily with capped later purchases."""
    n = sub.C.size
    x, y = np.zeros(n), np.zeros(n)
    for blk in sub.structure.partition:
        blk = np.array(blk)
        first = int(blk[np.argmin(sub.C[blk])])
        mass, spend = 0.0, 0.0
        alloc = np.zeros(n)
        for j in blk[np.argsort(sub.c_nominal[blk], kind="stable")]:
            if mass >= 1.0:
                break
            take = min(sub.d[j], 1.0 - mass)
            if take <= 0:
                continue
            alloc[j] = take
            mass += take
            spend += take * sub.c_nominal[j]
        if mass < 1.0 - 1e-12 or sub.C[first] <= spend:
            x[first] = 1.0
        else:
            y += alloc
    return CappedSolution(float(sub.C @ x + sub.c_nominal @ y), x, y)


def min_cost_unit_flow(nodes: int, arcs, capacity, cost, source: int, sink: int, amount: float = 1.0):
    """Successive shortest paths with node potentials.

    Returns ``(cost, flow)`` for sending ``amount`` from ``source`` to ``sink``, or
    ``None`` when the capacities do not allow it.  Costs must be nonnegative.
    """
    capacity = np.asarray(capacity, dtype=float)
    cost = np.asarray(cost, dtype=float)
    if np.any(cost < -_TOL):
        raise ValidationError("flow costs must be nonnegative")
    E = len(arcs)
    flow = np.zeros(E)
    out = [[] for _ in range(nodes)]
    for k, (a, b) in enumerate(arcs):
        out[a].append((k, b, 1))
        out[b].append((k, a, -1))
    pot = np.zeros(nodes)
    left = amount
    rounds = 0
    while left > 1e-12:
        rounds += 1
        if rounds > 10 * (E + 1) ** 2:
            raise NumericalError("flow augmentation did not terminate")
        dist = np.full(nodes, np.inf)
        pred: list = [None] * nodes
        dist[source] = 0.0
        heap = [(0.0, source)]
        done = np.zeros(nodes, dtype=bool)
        while heap:
            du, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for k, v, direction in out[u]:
                resid = capacity[k] - flow[k] if direction == 1 else flow[k]
                if resid <= 1e-12:
                    continue
                rc = direction * cost[k] + pot[u] - pot[v]
                nd = du + max(rc, 0.0)
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    pred[v] = (k, direction, u)
                    heapq.heappush(heap, (nd, v))
        if not np.isfinite(dist[sink]):
            return None
        pot += np.minimum(dist, dist[sink])
        push = left
        v = sink
        while v != source:
            k, direction, u = pred[v]
            push = min(push, capacity[k] - flow[k] if direction == 1 else flow[k])
            v = u
        v = sink
        while v != source:
            k, direction, u = pred[v]
            flow[k] += direction * push
            v = u
        left -= push
    flow[np.abs(flow) < 1e-13] = 0.0
    return float(cost @ flow), flow


def capped_sp_multigraph(sub: CappedSubproblem) -> CappedSolution:
    """Shortest path over first-stage arcs plus one "flow arc" per node pair.

    The flow arc ``(i, j)`` stands for the cheapest fractional unit i-j flow in
    the second stage under caps ``d``.  Reassembly is exact on acyclic graphs; on
    graphs with directed cycles separate flow segments may overlap, which is
    detected and reported.
    """
    st: ShortestPath = sub.structure
    arcs = st.arcs
    fwd = reachable(st.nodes, arcs, st.s)
    bwd = reachable(st.nodes, [(b, a) for a, b in arcs], st.t)
    useful = sorted(fwd & bwd)
    edges = []  # (tail, head, cost, kind, payload)
    for k, (a, b) in enumerate(arcs):
        edges.append((a, b, float(sub.C[k]), "first", k))
    for i in useful:
        for j in useful:
            if i == j:
                continue
            res = min_cost_unit_flow(st.nodes, arcs, sub.d, sub.c_nominal, i, j)
            if res is not None:
                edges.append((i, j, res[0], "flow", res[1]))
    adj = [[] for _ in range(st.nodes)]
    for e in edges:
        adj[e[0]].append(e)
    dist = [np.inf] * st.nodes
    pred: list = [None] * st.nodes
    dist[st.s] = 0.0
    heap = [(0.0, st.s)]
    done = [False] * st.nodes
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in adj[u]:
            nd = du + e[2]
            if nd < dist[e[1]]:
                dist[e[1]] = nd
                pred[e[1]] = e
                heapq.heappush(heap, (nd, e[1]))
    if not np.isfinite(dist[st.t]):
        raise InfeasibleError("t is unreachable in the multigraph")
    n = len(arcs)
    x, y = np.zeros(n), np.zeros(n)
    v = st.t
    while v != st.s:
        e = pred[v]
        if e[3] == "first":
            x[e[4]] = 1.0
        else:
            y += e[4]
        v = e[0]
    ls = build_linear_system(st, n)
    if (np.any(y > sub.d + 1e-9) or np.any(x + y > 1 + 1e-9)
            or np.abs(ls.H @ (x + y) - ls.g).max() > 1e-9):
        raise NumericalError("flow segments overlap; the graph must be acyclic")
    return CappedSolution(float(sub.C @ x + sub.c_nominal @ y), x, y)


def solve_capped(sub: CappedSubproblem, eps: float) -> CappedSolution:
    """Dispatch to the solver matching the structure."""
    st = sub.structure
    if isinstance(st, (Selection, AllOnes)):
        return capped_selection_dp(sub, eps)
    if isinstance(st, RepSelection):
        return capped_rs_greedy(sub)
    if isinstance(st, ShortestPath):
        return capped_sp_multigraph(sub)
    raise UnsupportedError(f"no capped solver for {type(st).__name__}")
