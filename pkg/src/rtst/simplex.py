"""Dense two-phase primal simplex with row duals.

Problems are stated as ``min/max c @ x`` subject to rows ``A[r] @ x (<=|>=|=) b[r]``
and variable bounds ``lb <= x <= ub`` (either side may be infinite).  The solver
works on a dense tableau; pricing is Dantzig's rule with lowest-index ties and
switches to Bland's rule once ``bland_after`` pivots have been spent.

Duals are reported as shadow prices: ``duals[r]`` is the derivative of the optimal
objective with respect to ``b[r]``.  For a minimization this makes ``>=`` rows
nonnegative and ``<=`` rows nonpositive.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

PIVOT_TOL = 1e-9
BLAND_AFTER = 10_000
MAX_ITER = 1_000_000

_SENSE_ALIASES = {"<=": "<=", "<": "<=", ">=": ">=", ">": ">=", "=": "=", "==": "="}


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: tuple
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    maximize: bool = False

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        k = c.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, k)
        if A.ndim != 2 or A.shape[1] != k:
            raise ValidationError(f"constraint matrix must have {k} columns, got shape {A.shape}")
        b = np.asarray(self.b, dtype=float).ravel()
        if b.size != A.shape[0]:
            raise ValidationError("right-hand side length does not match number of rows")
        senses = tuple(self.senses)
        if len(senses) != A.shape[0]:
            raise ValidationError("one sense per row is required")
        try:
            senses = tuple(_SENSE_ALIASES[s] for s in senses)
        except KeyError as exc:
            raise ValidationError(f"unknown row sense {exc.args[0]!r}") from None
        lb = np.zeros(k) if self.lb is None else np.asarray(self.lb, dtype=float).ravel().copy()
        ub = np.full(k, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel().copy()
        if lb.size != k or ub.size != k:
            raise ValidationError("bound vectors must match the number of variables")
        if np.any(lb == np.inf) or np.any(ub == -np.inf) or np.any(lb > ub):
            raise ValidationError("inconsistent variable bounds")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValidationError("LP data must be finite")
        for name, val in (("c", c), ("A", A), ("b", b), ("senses", senses), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "maximize", bool(self.maximize))

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class LpResult:
    status: LpStatus
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[:, j] = 0.0
    T[r, j] = 1.0


def _iterate(T, basis, allowed, it, max_iter, bland_after):
    """Run primal simplex pivots on ``T`` until optimal or unbounded."""
    m = T.shape[0] - 1
    ncols = allowed.size
    while True:
        if it >= max_iter:
            raise NumericalError(f"simplex iteration cap of {max_iter} reached")
        rc = T[-1, :ncols]
        cand = np.flatnonzero(allowed & (rc < -PIVOT_TOL))
        if cand.size == 0:
            return LpStatus.OPTIMAL, it
        if it < bland_after:
            j = cand[np.argmin(rc[cand])]
        else:
            j = cand[0]
        col = T[:m, j]
        pos = col > PIVOT_TOL
        if not pos.any():
            return LpStatus.UNBOUNDED, it
        rhs = np.maximum(T[:m, -1], 0.0)
        ratios = np.full(m, np.inf)
        ratios[pos] = rhs[pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))
        r = ties[np.argmin(basis[ties])]
        _pivot(T, r, j)
        basis[r] = j
        it += 1


def lp_solve(problem: LpProblem, *, max_iter: int = MAX_ITER, bland_after: int = BLAND_AFTER) -> LpResult:
    """Solve ``problem`` and return status, primal point, objective and row duals."""
    k, m = problem.num_vars, problem.num_rows
    c_min = -problem.c if problem.maximize else problem.c
    lb, ub = problem.lb, problem.ub

    # Map original variables onto nonnegative standard columns: x = offset + D @ x_std.
    offset = np.zeros(k)
    map_cols: list[tuple[int, float]] = []
    bound_rows: list[tuple[int, float]] = []
    for j in range(k):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo) and np.isfinite(hi) and hi - lo <= 0.0:
            offset[j] = lo
        elif np.isfinite(lo):
            offset[j] = lo
            map_cols.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append((len(map_cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            map_cols.append((j, -1.0))
        else:
            map_cols.append((j, 1.0))
            map_cols.append((j, -1.0))
    ks = len(map_cols)
    D = np.zeros((k, ks))
    for col, (j, sign) in enumerate(map_cols):
        D[j, col] = sign

    A_s = problem.A @ D
    b_s = problem.b - problem.A @ offset
    c_s = D.T @ c_min
    senses = list(problem.senses)
    if bound_rows:
        extra = np.zeros((len(bound_rows), ks))
        for i, (col, width) in enumerate(bound_rows):
            extra[i, col] = 1.0
        A_s = np.vstack([A_s, extra])
        b_s = np.concatenate([b_s, [w for _, w in bound_rows]])
        senses += ["<="] * len(bound_rows)
    mt = A_s.shape[0]

    slack_rows = [r for r in range(mt) if senses[r] != "="]
    ns = len(slack_rows)
    S = np.zeros((mt, ns))
    for i, r in enumerate(slack_rows):
        S[r, i] = 1.0 if senses[r] == "<=" else -1.0
    M = np.hstack([A_s, S])
    rhs = b_s.copy()
    flip = np.where(rhs < 0, -1.0, 1.0)
    M *= flip[:, None]
    rhs *= flip

    basis = np.full(mt, -1, dtype=int)
    for i, r in enumerate(slack_rows):
        if M[r, ks + i] > 0:
            basis[r] = ks + i
    art_rows = np.flatnonzero(basis < 0)
    n_struct = ks + ns
    art = np.zeros((mt, art_rows.size))
    for i, r in enumerate(art_rows):
        art[r, i] = 1.0
        basis[r] = n_struct + i
    N = n_struct + art_rows.size

    T = np.zeros((mt + 1, N + 1))
    T[:mt, :n_struct] = M
    T[:mt, n_struct:N] = art
    T[:mt, -1] = rhs
    it = 0
    kept = np.arange(mt)

    if art_rows.size:
        T[-1, n_struct:N] = 1.0
        T[-1] -= T[art_rows].sum(axis=0)
        allowed = np.ones(N, dtype=bool)
        _, it = _iterate(T, basis, allowed, it, max_iter, bland_after)
        feas_tol = 1e-9 * (1.0 + (np.abs(rhs).max() if mt else 0.0))
        if -T[-1, -1] > feas_tol:
            return LpResult(LpStatus.INFEASIBLE, None, float("nan"), None, it)
        redundant = []
        for r in range(mt):
            if basis[r] >= n_struct:
                row = np.abs(T[r, :n_struct])
                j = int(np.argmax(row)) if n_struct else -1
                if n_struct and row[j] > PIVOT_TOL:
                    T[r, -1] = 0.0
                    _pivot(T, r, j)
                    basis[r] = j
                else:
                    redundant.append(r)
        if redundant:
            keep_mask = np.ones(mt + 1, dtype=bool)
            keep_mask[redundant] = False
            T = T[keep_mask]
            basis = basis[keep_mask[:-1]]
            kept = kept[keep_mask[:-1]]
        T = np.hstack([T[:, :n_struct], T[:, -1:]])

    cost = np.concatenate([c_s, np.zeros(ns)])
    mk = kept.size
    T[-1, :n_struct] = cost - cost[basis] @ T[:mk, :n_struct]
    T[-1, -1] = -cost[basis] @ T[:mk, -1]
    status, it = _iterate(T, basis, np.ones(n_struct, dtype=bool), it, max_iter, bland_after)
    if status is LpStatus.UNBOUNDED:
        obj = float("inf") if problem.maximize else float("-inf")
        return LpResult(status, None, obj, None, it)

    x_std = np.zeros(n_struct)
    x_std[basis] = np.maximum(T[:mk, -1], 0.0)
    x = offset + D @ x_std[:ks]

    pi = np.zeros(mt)
    if mk:
        B = M[kept][:, basis]
        try:
            pi_kept = np.linalg.solve(B.T, cost[basis])
        except np.linalg.LinAlgError:
            pi_kept = np.linalg.lstsq(B.T, cost[basis], rcond=None)[0]
        pi[kept] = pi_kept
    pi *= flip
    duals = pi[:m].copy()
    if problem.maximize:
        duals = -duals
    return LpResult(LpStatus.OPTIMAL, x, float(problem.c @ x), duals, it)
