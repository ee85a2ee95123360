"""Problem instances, feasible-set structures and instance generators."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedError, ValidationError
from .uncertainty import (
    TAU,
    Budgeted,
    Ellipsoid,
    HPolytope,
    MultiBudget,
    ScenarioCertificate,
    VPolytope,
)


# --------------------------------------------------------------------------- structures


@dataclass(frozen=True)
class Selection:
    """Choose exactly ``p`` of the ``n`` items."""

    p: int
    kind = "selection"

    def validate(self, n: int) -> None:
        if not 1 <= self.p <= n:
            raise ValidationError(f"selection needs 1 <= p <= n, got p={self.p}, n={n}")


@dataclass(frozen=True)
class RepSelection:
    """Choose exactly one item from each block of a partition of the items."""

    partition: tuple
    kind = "rep_selection"

    def __post_init__(self):
        object.__setattr__(self, "partition", tuple(tuple(int(i) for i in blk) for blk in self.partition))

    def validate(self, n: int) -> None:
        flat = sorted(i for blk in self.partition for i in blk)
        if flat != list(range(n)) or any(len(blk) == 0 for blk in self.partition):
            raise ValidationError("partition must split 0..n-1 into nonempty blocks")


@dataclass(frozen=True)
class ShortestPath:
    """Arc ``k`` of ``arcs`` carries cost index ``k``; a solution is a unit s-t flow."""

    nodes: int
    arcs: tuple
    s: int
    t: int
    kind = "shortest_path"

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple((int(a), int(b)) for a, b in self.arcs))

    def validate(self, n: int) -> None:
        if len(self.arcs) != n:
            raise ValidationError("number of arcs must equal n")
        if not (0 <= self.s < self.nodes and 0 <= self.t < self.nodes) or self.s == self.t:
            raise ValidationError("s and t must be distinct nodes")
        if any(not (0 <= a < self.nodes and 0 <= b < self.nodes) or a == b for a, b in self.arcs):
            raise ValidationError("arcs must join distinct existing nodes")
        if self.t not in reachable(self.nodes, self.arcs, self.s):
            raise ValidationError("no s-t path exists")

    def is_acyclic(self) -> bool:
        return topological_order(self.nodes, self.arcs) is not None


@dataclass(frozen=True)
class SpanningTree:
    nodes: int
    edges: tuple
    kind = "spanning_tree"

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))

    def validate(self, n: int) -> None:
        if len(self.edges) != n:
            raise ValidationError("number of edges must equal n")
        if any(not (0 <= a < self.nodes and 0 <= b < self.nodes) or a == b for a, b in self.edges):
            raise ValidationError("edges must join distinct existing nodes")
        und = self.edges + tuple((b, a) for a, b in self.edges)
        if len(reachable(self.nodes, und, 0)) != self.nodes:
            raise ValidationError("graph is not connected")


@dataclass(frozen=True)
class AllOnes:
    """The only feasible solution is the all-ones vector."""

    kind = "all_ones"

    def validate(self, n: int) -> None:
        if n < 1:
            raise ValidationError("need at least one item")


Structure = Selection | RepSelection | ShortestPath | SpanningTree | AllOnes


def reachable(nodes: int, arcs, start: int) -> set:
    adj = [[] for _ in range(nodes)]
    for a, b in arcs:
        adj[a].append(b)
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def topological_order(nodes: int, arcs):
    """Kahn's algorithm; returns ``None`` when the digraph has a directed cycle."""
    indeg = [0] * nodes
    adj = [[] for _ in range(nodes)]
    for a, b in arcs:
        adj[a].append(b)
        indeg[b] += 1
    queue = deque(v for v in range(nodes) if indeg[v] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in adj[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return order if len(order) == nodes else None


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Rows ``H z (relation) g`` whose binary solutions are the feasible set."""

    H: np.ndarray
    g: np.ndarray
    senses: tuple
    integral: bool = True


def build_linear_system(structure, n: int) -> LinearSystem:
    if isinstance(structure, Selection):
        return LinearSystem(np.ones((1, n)), np.array([float(structure.p)]), ("=",))
    if isinstance(structure, RepSelection):
        H = np.zeros((len(structure.partition), n))
        for row, blk in enumerate(structure.partition):
            H[row, list(blk)] = 1.0
        return LinearSystem(H, np.ones(H.shape[0]), ("=",) * H.shape[0])
    if isinstance(structure, ShortestPath):
        H = np.zeros((structure.nodes, n))
        for k, (a, b) in enumerate(structure.arcs):
            H[a, k] += 1.0
            H[b, k] -= 1.0
        g = np.zeros(structure.nodes)
        g[structure.s] = 1.0
        g[structure.t] = -1.0
        return LinearSystem(H, g, ("=",) * structure.nodes)
    if isinstance(structure, AllOnes):
        return LinearSystem(np.ones((1, n)), np.array([float(n)]), ("=",))
    raise UnsupportedError(f"no integral linear description for {type(structure).__name__}")


# --------------------------------------------------------------------------- instances


@dataclass(frozen=True, eq=False)
class Instance:
    C: np.ndarray
    structure: object
    uncertainty: object

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        if C.ndim != 1 or C.size == 0:
            raise ValidationError("first-stage costs must be a nonempty vector")
        if not np.all(np.isfinite(C)) or np.any(C < -TAU):
            raise ValidationError("first-stage costs must be finite and nonnegative")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        self.structure.validate(C.size)
        if self.uncertainty.dim != C.size:
            raise ValidationError("uncertainty set dimension differs from n")

    @property
    def n(self) -> int:
        return self.C.size

    def linear_system(self) -> LinearSystem:
        return build_linear_system(self.structure, self.n)


@dataclass(frozen=True, eq=False)
class TwoStageSolution:
    x: np.ndarray
    y: np.ndarray
    value: float
    worst_scenario: ScenarioCertificate | None = None


@dataclass(frozen=True)
class Bounds:
    lb: float
    ub: float

    @property
    def rho(self) -> float:
        if self.lb <= 0:
            return 1.0 if self.ub <= 0 else math.inf
        return self.ub / self.lb


@dataclass(frozen=True, eq=False)
class ApproxResult:
    """Outcome of an approximation algorithm.

    ``value`` is always the true robust cost of ``x``.  ``model_value`` is the
    objective the algorithm itself optimized or certified, when it has one.
    """

    x: np.ndarray
    value: float
    guarantee: float
    lb: float | None = None
    model_value: float | None = None
    y: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


# --------------------------------------------------------------------------- generators


def _path_graph(n: int) -> ShortestPath:
    return ShortestPath(n + 1, tuple((k, k + 1) for k in range(n)), 0, n)


def gen_chain_instance(n: int, C, U, *, all_ones: bool = False) -> Instance:
    """Series chain of ``n`` arcs: the only s-t path uses every item."""
    C = np.asarray(C, dtype=float)
    if C.size != n:
        raise ValidationError("C must have n entries")
    return Instance(C, AllOnes() if all_ones else _path_graph(n), U)


def gen_sp_gap_instance(m: int, M: float | None = None) -> Instance:
    """``m`` parallel two-arc paths s -> i -> t whose LP relaxation is ``m`` times too weak.

    Node 0 is s, node 1 is t and nodes 2..m+1 are the middle nodes.  Arcs (s, i)
    come first, then arcs (i, t).  First-stage use of (s, i) is free while its
    second-stage cost is ``M``; (i, t) costs ``M`` now and ``0`` later, but later it
    may rise by up to ``m`` under a total budget of ``m``.
    """
    if m < 1:
        raise ValidationError("m must be positive")
    M = float(10 * m if M is None else M)
    if M <= m:
        raise ValidationError("M must exceed m")
    arcs = [(0, 2 + i) for i in range(m)] + [(2 + i, 1) for i in range(m)]
    C = np.array([0.0] * m + [M] * m)
    c_nom = np.array([M] * m + [0.0] * m)
    d = np.array([0.0] * m + [float(m)] * m)
    return Instance(C, ShortestPath(m + 2, tuple(arcs), 0, 1), Budgeted(c_nom, d, float(m)))


def gen_selection_gap_instance() -> Instance:
    """Two items, pick both; LP relaxation 3/2 against an integral optimum of 2."""
    U = HPolytope(np.zeros(2), np.array([[1.0, 0.5]]), np.array([1.0]))
    return Instance(np.array([10.0, 1.0]), Selection(2), U)


def gen_selection_tightness_instance(mu: float, gamma: float, eps: float) -> Instance:
    if not (0 < mu < 0.5 and gamma > 0 and eps > 0):
        raise ValidationError("need 0 < mu < 1/2 and positive gamma, eps")
    U = HPolytope(np.array([0.0, eps]), np.array([[1.0, 0.5 + mu]]), np.array([1.0]))
    return Instance(np.array([10.0, gamma]), Selection(2), U)


def gen_split_minmax_sp(nodes: int, arcs, s: int, t: int, scenarios) -> Instance:
    """Split every arc into a pair so first-stage choices cost nothing.

    Arc ``e = (a, b)`` becomes ``a -> m_e`` (the "dashed" arc, free in stage one,
    very expensive in stage two) followed by ``m_e -> b`` which carries the scenario
    cost of ``e`` in stage two and is very expensive in stage one.  The robust
    optimum equals the min-max path value over ``scenarios``.
    """
    V = np.asarray(scenarios, dtype=float)
    E = len(arcs)
    big = 1.0 + E * V.max(initial=0.0) * 4
    new_arcs, C = [], []
    for k, (a, b) in enumerate(arcs):
        mid = nodes + k
        new_arcs += [(a, mid), (mid, b)]
        C += [0.0, big]
    verts = np.zeros((V.shape[0], 2 * E))
    verts[:, 0::2] = big
    verts[:, 1::2] = V
    return Instance(np.array(C), ShortestPath(nodes + E, tuple(new_arcs), s, t), VPolytope(verts))


# --------------------------------------------------------------------------- reductions


def reduce_vp_to_hp(instance: Instance) -> Instance:
    """Rewrite a scenario-hull all-ones instance as an H-polytope all-ones instance.

    The new cost vector is ``(delta, lambda)`` with ``delta = sum_j lambda_j c_j`` and
    ``sum_j lambda_j = 1``; the ``lambda`` items are free in stage one.
    """
    if not isinstance(instance.structure, AllOnes) or not isinstance(instance.uncertainty, VPolytope):
        raise UnsupportedError("reduction needs an all-ones structure with a vertex-hull set")
    V = instance.uncertainty.vertices
    K, n = V.shape
    eq = np.hstack([np.eye(n), -V.T])
    simplex_row = np.concatenate([np.zeros(n), np.ones(K)])[None, :]
    A = np.vstack([eq, -eq, simplex_row, -simplex_row])
    b = np.concatenate([np.zeros(2 * n), [1.0, -1.0]])
    U = HPolytope(np.zeros(n + K), A, b)
    return Instance(np.concatenate([instance.C, np.zeros(K)]), AllOnes(), U)


def reduce_two_scenario_to_ellipsoid(instance: Instance) -> Instance:
    """Two-scenario all-ones instance -> degenerate-ellipsoid instance of twice the value."""
    U = instance.uncertainty
    if not isinstance(instance.structure, AllOnes) or not isinstance(U, VPolytope) or U.vertices.shape[0] != 2:
        raise UnsupportedError("reduction needs an all-ones structure with exactly two scenarios")
    c1, c2 = U.vertices
    n = instance.n
    A = np.zeros((n, n))
    A[:, 0] = c1 - c2
    return Instance(2.0 * instance.C, AllOnes(), Ellipsoid(c1 + c2, A))


# --------------------------------------------------------------------------- random corpus

STRUCTURE_KINDS = ("selection", "rep_selection", "shortest_path", "all_ones")
FAMILIES = ("hpolytope", "vpolytope", "budgeted", "multibudget", "ellipsoid")


def random_dag(rng: np.random.Generator, n_arcs: int) -> ShortestPath:
    """Random acyclic digraph with exactly ``n_arcs`` arcs and an s-t path (s=0, t=last)."""
    nodes = 2
    while nodes * (nodes - 1) // 2 < n_arcs:
        nodes += 1
    nodes = min(nodes + int(rng.integers(0, 2)), max(nodes, n_arcs + 1))
    t = nodes - 1
    inner = sorted(rng.choice(np.arange(1, t), size=int(rng.integers(0, min(t - 1, n_arcs - 1) + 1)), replace=False)) if t > 1 else []
    path = [0, *[int(v) for v in inner], t]
    arcs = {(path[i], path[i + 1]) for i in range(len(path) - 1)}
    pool = [(a, b) for a in range(nodes) for b in range(a + 1, nodes) if (a, b) not in arcs]
    extra = rng.choice(len(pool), size=n_arcs - len(arcs), replace=False) if n_arcs > len(arcs) else []
    arcs |= {pool[int(i)] for i in extra}
    order = sorted(arcs)
    perm = rng.permutation(len(order))
    return ShortestPath(nodes, tuple(order[int(i)] for i in perm), 0, t)


def random_structure(rng: np.random.Generator, kind: str, n: int):
    if kind == "selection":
        return Selection(int(rng.integers(1, n + 1)))
    if kind == "rep_selection":
        blocks = int(rng.integers(1, n + 1))
        labels = np.concatenate([np.arange(blocks), rng.integers(0, blocks, size=n - blocks)])
        labels = rng.permutation(labels)
        return RepSelection(tuple(tuple(int(i) for i in np.flatnonzero(labels == b)) for b in range(blocks)))
    if kind == "shortest_path":
        return random_dag(rng, n)
    if kind == "all_ones":
        return AllOnes()
    if kind == "spanning_tree":
        nodes = 2
        while nodes * (nodes - 1) // 2 < n:
            nodes += 1
        nodes = min(nodes + int(rng.integers(0, 2)), n + 1)
        edges = {(int(rng.integers(0, v)), v) for v in range(1, nodes)}
        pool = [(a, b) for a in range(nodes) for b in range(a + 1, nodes) if (a, b) not in edges]
        take = rng.choice(len(pool), size=n - len(edges), replace=False) if n > len(edges) else []
        edges |= {pool[int(i)] for i in take}
        return SpanningTree(nodes, tuple(sorted(edges)))
    raise ValidationError(f"unknown structure kind {kind!r}")


def random_uncertainty(rng: np.random.Generator, family: str, n: int, *, size: int | None = None):
    r2 = lambda a: np.round(a, 2)  # noqa: E731
    if family == "vpolytope":
        K = size or int(rng.integers(1, 4))
        return VPolytope(r2(rng.uniform(0, 10, size=(K, n))))
    if family == "hpolytope":
        m = size or int(rng.integers(1, 4))
        A = r2(rng.uniform(0, 1, size=(m, n)) * (rng.random((m, n)) < 0.8))
        for i in range(n):
            if not A[:, i].any():
                A[int(rng.integers(0, m)), i] = 1.0
        return HPolytope(r2(rng.uniform(0, 5, size=n)), A, r2(rng.uniform(1, 6, size=m)))
    if family == "budgeted":
        d = r2(rng.uniform(0, 5, size=n))
        return Budgeted(r2(rng.uniform(0, 5, size=n)), d, float(r2(rng.uniform(0, d.sum() + 1e-9))))
    if family == "multibudget":
        K = size or int(rng.integers(1, 3))
        labels = np.concatenate([np.arange(min(K, n)), rng.integers(0, K, size=max(n - K, 0))])[:n]
        labels = rng.permutation(labels)
        subsets = [set(np.flatnonzero(labels == j).tolist()) for j in range(K)]
        for j in range(K):
            for i in range(n):
                if rng.random() < 0.2:
                    subsets[j].add(i)
            if not subsets[j]:
                subsets[j].add(int(rng.integers(0, n)))
        return MultiBudget(r2(rng.uniform(0, 5, size=n)), tuple(tuple(sorted(s)) for s in subsets), r2(rng.uniform(0, 6, size=K)))
    if family == "ellipsoid":
        q = size or int(rng.integers(1, 3))
        c_nom = r2(rng.uniform(2, 10, size=n))
        A = rng.normal(size=(n, q))
        norms = np.linalg.norm(A, axis=1)
        cap = c_nom * rng.uniform(0.2, 0.95, size=n)
        A = A * (cap / np.maximum(norms, 1e-12))[:, None]
        return Ellipsoid(c_nom, r2(A * 0.999))
    raise ValidationError(f"unknown family {family!r}")


def random_instance(rng: np.random.Generator, n: int, kind: str, family: str, *, size: int | None = None) -> Instance:
    structure = random_structure(rng, kind, n)
    U = random_uncertainty(rng, family, n, size=size)
    C = np.round(rng.uniform(0, 10, size=n), 2)
    return Instance(C, structure, U)
