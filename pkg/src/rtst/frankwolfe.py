"""Pairwise Frank-Wolfe for ``lin @ v + ||M v||_2`` over a polytope given by a linear oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError


@dataclass(frozen=True, eq=False)
class NormObjective:
    """``lin @ v + sqrt(||M v||^2 + mu^2) - mu``; the smoothing vanishes as ``mu -> 0``."""

    lin: np.ndarray
    M: np.ndarray
    mu: float

    def smoothed(self, v) -> float:
        w = self.M @ v
        return float(self.lin @ v + np.sqrt(w @ w + self.mu**2) - self.mu)

    def exact(self, v) -> float:
        return float(self.lin @ v + np.linalg.norm(self.M @ v))

    def grad(self, v) -> np.ndarray:
        return self.lin + self.M.T @ self.dual_point(v)

    def dual_point(self, v) -> np.ndarray:
        """``delta`` with ``||delta|| < 1`` such that the gradient is ``lin + M^T delta``."""
        w = self.M @ v
        return w / np.sqrt(w @ w + self.mu**2)

    def line_min(self, v, d, gmax: float) -> float:
        """Exact minimizer of the smoothed objective on ``v + gamma d``, ``0 <= gamma <= gmax``."""
        p, q = self.M @ v, self.M @ d
        b = float(self.lin @ d)
        r, s = float(q @ q), float(p @ q)
        pp = float(p @ p) + self.mu**2
        cands = [0.0, gmax]
        if r > 0:
            # stationary points of b*gamma + sqrt(r gamma^2 + 2 s gamma + pp)
            qa = r * (b * b - r)
            qb = 2 * s * (b * b - r)
            qc = b * b * pp - s * s
            if abs(qa) > 1e-300:
                disc = qb * qb - 4 * qa * qc
                if disc >= 0:
                    root = np.sqrt(disc)
                    cands += [(-qb + root) / (2 * qa), (-qb - root) / (2 * qa)]
            elif abs(qb) > 1e-300:
                cands.append(-qc / qb)
            cands.append(-s / r)
        best_g, best_f = 0.0, np.inf
        for gam in cands:
            if not np.isfinite(gam):
                continue
            gam = min(max(gam, 0.0), gmax)
            f = self.smoothed(v + gam * d)
            if f < best_f:
                best_g, best_f = gam, f
        return best_g


@dataclass(frozen=True, eq=False)
class FWResult:
    """``dual`` is a ``delta`` in the unit ball with ``min_v (lin + M^T delta) @ v >= lower``."""

    point: np.ndarray
    value: float
    lower: float
    gap: float
    iterations: int
    dual: np.ndarray | None = None


def frank_wolfe(obj: NormObjective, lmo, *, tol: float = 1e-6, max_iter: int = 20_000, strict: bool = False,
                cutoff: float = np.inf) -> FWResult:
    """Minimize ``obj`` over the convex hull of the vertices returned by ``lmo``.

    ``lmo(g)`` returns a vertex minimizing ``g @ v``.  The returned ``lower`` is a
    valid lower bound on the unsmoothed minimum; ``value`` is the unsmoothed
    objective at the final point.  Iteration stops early once ``lower`` reaches
    ``cutoff``.
    """
    v = np.asarray(lmo(obj.lin), dtype=float)
    verts = [v.copy()]
    weights = [1.0]
    lower = -np.inf
    dual = None
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        delta = obj.dual_point(v)
        g = obj.lin + obj.M.T @ delta
        s = np.asarray(lmo(g), dtype=float)
        fv = obj.smoothed(v)
        gap = float(g @ (v - s))
        if fv - gap > lower:
            lower, dual = fv - gap, delta
        if gap <= tol * (1.0 + abs(fv)) or lower >= cutoff:
            break
        dots = [float(g @ a) for a in verts]
        ia = int(np.argmax(dots))
        is_ = next((i for i, a in enumerate(verts) if np.array_equal(a, s)), None)
        if is_ is None:
            verts.append(s)
            weights.append(0.0)
            is_ = len(verts) - 1
        if is_ == ia:
            # away vertex coincides with the new one; fall back to a plain step
            d = s - v
            gam = obj.line_min(v, d, 1.0)
            weights = [w * (1 - gam) for w in weights]
            weights[is_] += gam
        else:
            d = verts[is_] - verts[ia]
            gam = obj.line_min(v, d, weights[ia])
            weights[is_] += gam
            weights[ia] -= gam
        v = v + gam * d
        keep = [i for i, w in enumerate(weights) if w > 1e-14]
        verts = [verts[i] for i in keep]
        weights = [weights[i] for i in keep]
        total = sum(weights)
        weights = [w / total for w in weights]
    else:
        if strict and lower < cutoff:
            raise NumericalError(f"Frank-Wolfe did not reach gap {tol} in {max_iter} iterations")
    return FWResult(v, obj.exact(v), float(lower), gap, it, dual)


def cutting_plane_polish(obj: NormObjective, A, b, senses, lb, ub, seeds=(), *, tol: float = 1e-6,
                         max_rounds: int = 300, cutoff: float = np.inf):
    """Kelley cuts for ``||M v||`` inside an LP over ``{v : A v ~ b, lb <= v <= ub}``.

    Each round solves ``min lin @ v + t`` with ``t >= d_k @ M v`` for the unit
    directions ``d_k`` collected so far, then adds the direction of ``M v`` at the
    new point.  The LP value is a lower bound; the true objective at the LP
    point is an upper bound.  The cut duals combine the directions into a
    ``delta`` that certifies the lower bound.  This handles optima where ``M v = 0`` (the norm's
    kink), which first-order methods on the smoothed objective approach slowly.
    Returns ``None`` when the polytope is empty.
    """
    from .simplex import LpProblem, LpStatus, lp_solve

    M = obj.M
    q, k = M.shape
    dirs = [row for row in np.vstack([np.eye(q), -np.eye(q)])]
    for s in seeds:
        w = M @ s
        nrm = np.linalg.norm(w)
        if nrm > 0:
            dirs.append(w / nrm)
    A = np.asarray(A, dtype=float)
    base = np.hstack([A, np.zeros((A.shape[0], 1))])
    c = np.concatenate([obj.lin, [1.0]])
    lo = np.concatenate([lb, [0.0]])
    hi = np.concatenate([ub, [np.inf]])
    best_v, best_val, lower, dual, it = None, np.inf, -np.inf, None, 0
    rows = A.shape[0]
    for it in range(1, max_rounds + 1):
        cuts = np.array([np.concatenate([d @ M, [-1.0]]) for d in dirs])
        res = lp_solve(LpProblem(c, np.vstack([base, cuts]), np.concatenate([b, np.zeros(len(dirs))]),
                                 tuple(senses) + ("<=",) * len(dirs), lo, hi))
        if res.status is LpStatus.INFEASIBLE:
            return None
        if not res.optimal:
            raise NumericalError(f"cutting-plane LP ended with status {res.status.value}")
        v = res.x[:k]
        if res.objective > lower:
            weights = np.maximum(-res.duals[rows:], 0.0)
            delta = weights @ np.array(dirs)
            nrm = np.linalg.norm(delta)
            lower, dual = res.objective, (delta / nrm if nrm > 1.0 else delta)
        val = obj.exact(v)
        if val < best_val:
            best_v, best_val = v, val
        if best_val - lower <= tol * (1.0 + abs(best_val)) or lower >= cutoff:
            break
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            break
        dirs.append(w / nrm)
    return FWResult(best_v, float(best_val), float(lower), float(best_val - lower), it, dual)
