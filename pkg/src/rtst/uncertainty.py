"""Convex uncertainty sets for second-stage cost vectors.

Every set lives in the nonnegative orthant of R^n.  Polyhedral families expose an
``hform()`` triple ``(c_nominal, A, b)`` describing ``{c_nominal + delta : A delta <= b,
delta >= 0}``; the compact models and the adversary LPs are written against that
form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .simplex import LpProblem, LpStatus, lp_solve

TAU = 1e-9


@dataclass(frozen=True, eq=False)
class ScenarioCertificate:
    """A concrete scenario together with the objective value it attains."""

    c: np.ndarray
    attained: float


def _frozen(arr, *, ndim: int, name: str) -> np.ndarray:
    out = np.array(arr, dtype=float)
    if out.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} must be finite")
    out.setflags(write=False)
    return out


def _hform_checks(c_nominal: np.ndarray, A: np.ndarray, b: np.ndarray) -> None:
    n = c_nominal.size
    if np.any(c_nominal < -TAU):
        raise ValidationError("nominal costs must be nonnegative")
    probe = lp_solve(LpProblem(np.ones(n), A, b, ("<=",) * A.shape[0], maximize=True))
    if probe.status is LpStatus.INFEASIBLE:
        raise ValidationError("uncertainty set is empty")
    if probe.status is LpStatus.UNBOUNDED:
        raise ValidationError("uncertainty set is unbounded")


def _hform_support(c_nominal, A, b, y) -> tuple[float, ScenarioCertificate]:
    res = lp_solve(LpProblem(y, A, b, ("<=",) * A.shape[0], maximize=True))
    if not res.optimal:
        raise NumericalError(f"support LP ended with status {res.status.value}")
    c = c_nominal + res.x
    return float(c @ y), ScenarioCertificate(c, float(c @ y))


def _hform_contains(c_nominal, A, b, c, tol) -> bool:
    delta = c - c_nominal
    scale = 1.0 + np.abs(c).max(initial=0.0)
    if np.any(delta < -tol * scale):
        return False
    return bool(np.all(A @ delta <= b + tol * (1.0 + np.abs(b).max(initial=0.0)) * scale))


@dataclass(frozen=True, eq=False)
class HPolytope:
    """``{c_nominal + delta : A delta <= b, delta >= 0}``."""

    c_nominal: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = _frozen(self.c_nominal, ndim=1, name="c_nominal")
        A = _frozen(np.asarray(self.A, dtype=float).reshape(-1, c.size), ndim=2, name="A")
        b = _frozen(self.b, ndim=1, name="b")
        if A.shape[0] != b.size:
            raise ValidationError("A and b disagree on the number of rows")
        _hform_checks(c, A, b)
        object.__setattr__(self, "c_nominal", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.c_nominal.size

    def hform(self):
        return self.c_nominal, self.A, self.b

    def support(self, y):
        return _hform_support(self.c_nominal, self.A, self.b, np.asarray(y, dtype=float))

    def coordinate_max(self) -> np.ndarray:
        out = np.empty(self.dim)
        for i in range(self.dim):
            out[i] = self.support(np.eye(self.dim)[i])[0]
        return out

    def contains(self, c, tol: float = 1e-7) -> bool:
        return _hform_contains(self.c_nominal, self.A, self.b, np.asarray(c, dtype=float), tol)


@dataclass(frozen=True, eq=False)
class Budgeted:
    """Each cost may rise by at most ``d_i``; total increase is at most ``gamma``."""

    c_nominal: np.ndarray
    d: np.ndarray
    gamma: float

    def __post_init__(self):
        c = _frozen(self.c_nominal, ndim=1, name="c_nominal")
        d = _frozen(self.d, ndim=1, name="d")
        gamma = float(self.gamma)
        if d.size != c.size:
            raise ValidationError("d must match the dimension of c_nominal")
        if np.any(c < -TAU) or np.any(d < -TAU) or not (gamma >= -TAU and np.isfinite(gamma)):
            raise ValidationError("budgeted set needs nonnegative c_nominal, d and gamma")
        object.__setattr__(self, "c_nominal", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "gamma", max(gamma, 0.0))

    @property
    def dim(self) -> int:
        return self.c_nominal.size

    def hform(self):
        n = self.dim
        A = np.vstack([np.eye(n), np.ones((1, n))])
        return self.c_nominal, A, np.concatenate([self.d, [self.gamma]])

    def support(self, y):
        y = np.asarray(y, dtype=float)
        delta = np.zeros(self.dim)
        left = self.gamma
        for i in np.argsort(-y, kind="stable"):
            if left <= 0 or y[i] <= 0:
                break
            delta[i] = min(self.d[i], left)
            left -= delta[i]
        c = self.c_nominal + delta
        return float(c @ y), ScenarioCertificate(c, float(c @ y))

    def coordinate_max(self) -> np.ndarray:
        return self.c_nominal + np.minimum(self.d, self.gamma)

    def contains(self, c, tol: float = 1e-7) -> bool:
        return _hform_contains(*self.hform(), np.asarray(c, dtype=float), tol)


@dataclass(frozen=True, eq=False)
class MultiBudget:
    """Separate budgets ``gammas[j]`` on the total increase over each index subset."""

    c_nominal: np.ndarray
    subsets: tuple
    gammas: np.ndarray

    def __post_init__(self):
        c = _frozen(self.c_nominal, ndim=1, name="c_nominal")
        subsets = tuple(tuple(sorted(int(i) for i in s)) for s in self.subsets)
        gammas = _frozen(self.gammas, ndim=1, name="gammas")
        if len(subsets) != gammas.size or not subsets:
            raise ValidationError("need one budget per subset and at least one subset")
        covered = set()
        for s in subsets:
            if not s or min(s) < 0 or max(s) >= c.size or len(set(s)) != len(s):
                raise ValidationError(f"bad subset {s}")
            covered.update(s)
        if len(covered) != c.size:
            raise ValidationError("uncertainty set is unbounded: some coordinate lies in no subset")
        if np.any(c < -TAU) or np.any(gammas < -TAU):
            raise ValidationError("budgets and nominal costs must be nonnegative")
        object.__setattr__(self, "c_nominal", c)
        object.__setattr__(self, "subsets", subsets)
        object.__setattr__(self, "gammas", gammas)

    @property
    def dim(self) -> int:
        return self.c_nominal.size

    def hform(self):
        A = np.zeros((len(self.subsets), self.dim))
        for j, s in enumerate(self.subsets):
            A[j, list(s)] = 1.0
        return self.c_nominal, A, self.gammas.copy()

    def support(self, y):
        return _hform_support(*self.hform(), np.asarray(y, dtype=float))

    def coordinate_max(self) -> np.ndarray:
        out = self.c_nominal.copy()
        for i in range(self.dim):
            out[i] += min(g for s, g in zip(self.subsets, self.gammas) if i in s)
        return out

    def contains(self, c, tol: float = 1e-7) -> bool:
        return _hform_contains(*self.hform(), np.asarray(c, dtype=float), tol)


@dataclass(frozen=True, eq=False)
class VPolytope:
    """Convex hull of finitely many scenarios (rows of ``vertices``)."""

    vertices: np.ndarray

    def __post_init__(self):
        V = _frozen(self.vertices, ndim=2, name="vertices")
        if V.shape[0] == 0:
            raise ValidationError("at least one vertex is required")
        if np.any(V < -TAU):
            raise ValidationError("scenario costs must be nonnegative")
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def support(self, y):
        vals = self.vertices @ np.asarray(y, dtype=float)
        k = int(np.argmax(vals))
        return float(vals[k]), ScenarioCertificate(self.vertices[k].copy(), float(vals[k]))

    def coordinate_max(self) -> np.ndarray:
        return self.vertices.max(axis=0)

    def contains(self, c, tol: float = 1e-7) -> bool:
        c = np.asarray(c, dtype=float)
        K, n = self.vertices.shape
        # minimize the L1 residual of c - V^T lambda over the simplex
        obj = np.concatenate([np.zeros(K), np.ones(2 * n)])
        A = np.vstack([
            np.hstack([self.vertices.T, np.eye(n), -np.eye(n)]),
            np.concatenate([np.ones(K), np.zeros(2 * n)])[None, :],
        ])
        res = lp_solve(LpProblem(obj, A, np.concatenate([c, [1.0]]), ("=",) * (n + 1)))
        return res.optimal and res.objective <= tol * (1.0 + np.abs(c).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{c_nominal + A delta : ||delta||_2 <= 1}`` with ``A`` of shape ``(n, q)``."""

    c_nominal: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        c = _frozen(self.c_nominal, ndim=1, name="c_nominal")
        A = _frozen(np.asarray(self.A, dtype=float).reshape(c.size, -1), ndim=2, name="A")
        slack = c - np.linalg.norm(A, axis=1)
        if np.any(slack < -TAU):
            raise ValidationError("ellipsoid leaves the nonnegative orthant")
        object.__setattr__(self, "c_nominal", c)
        object.__setattr__(self, "A", A)

    @property
    def dim(self) -> int:
        return self.c_nominal.size

    def support(self, y):
        y = np.asarray(y, dtype=float)
        w = self.A.T @ y
        norm = float(np.linalg.norm(w))
        c = self.c_nominal + (self.A @ (w / norm) if norm > 0 else 0.0)
        return float(self.c_nominal @ y + norm), ScenarioCertificate(c, float(c @ y))

    def coordinate_max(self) -> np.ndarray:
        return self.c_nominal + np.linalg.norm(self.A, axis=1)

    def contains(self, c, tol: float = 1e-7) -> bool:
        r = np.asarray(c, dtype=float) - self.c_nominal
        delta = np.linalg.lstsq(self.A, r, rcond=None)[0]
        scale = 1.0 + np.abs(r).max(initial=0.0)
        if np.abs(self.A @ delta - r).max(initial=0.0) > tol * scale:
            return False
        return bool(np.linalg.norm(delta) <= 1.0 + tol)


POLYHEDRAL = (HPolytope, Budgeted, MultiBudget)
UncertaintySet = HPolytope | Budgeted | MultiBudget | VPolytope | Ellipsoid


def support_max(U, y) -> tuple[float, ScenarioCertificate]:
    """Return ``max_{c in U} c @ y`` and a maximizing scenario."""
    y = np.asarray(y, dtype=float)
    if y.size != U.dim:
        raise ValidationError("direction has the wrong dimension")
    return U.support(y)


def coordinate_max(U) -> np.ndarray:
    """Per-coordinate maximum cost over ``U``."""
    return U.coordinate_max()


def contains(U, c, tol: float = 1e-7) -> bool:
    c = np.asarray(c, dtype=float)
    if c.size != U.dim:
        return False
    return U.contains(c, tol)
