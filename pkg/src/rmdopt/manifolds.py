"""Manifold geometry: Stiefel, unit sphere, and Hessian-metric Euclidean space.

Points and tangent vectors are numpy arrays; the ``check_*`` functions
enforce the feasibility tolerances and are called wherever an input crosses
a public boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateInput, DimensionMismatch, DomainViolation, InfeasiblePoint, TangentMismatch

STIEFEL_TOL = 1e-8
SPHERE_TOL = 1e-10


# ---------------------------------------------------------------- Stiefel

def stiefel_residual(X):
    """Feasibility residual ``||X^T X - I_p||_F``."""
    X = np.asarray(X, dtype=np.float64)
    return float(np.linalg.norm(X.T @ X - np.eye(X.shape[1])))


def check_stiefel(X, tol=STIEFEL_TOL):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < X.shape[1] or X.shape[1] < 1:
        raise DimensionMismatch(f"Stiefel point must be n x p with n >= p >= 1, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InfeasiblePoint("non-finite entries")
    res = stiefel_residual(X)
    if res > tol:
        raise InfeasiblePoint(f"||X^T X - I|| = {res:.3e} exceeds {tol:.0e}")
    return X


def stiefel_tangent_residual(X, Z):
    S = X.T @ Z
    return float(np.linalg.norm(S + S.T))


def check_stiefel_tangent(X, Z, tol=STIEFEL_TOL):
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != np.shape(X):
        raise DimensionMismatch(f"tangent shape {Z.shape} != point shape {np.shape(X)}")
    res = stiefel_tangent_residual(X, Z)
    if res > tol:
        raise TangentMismatch(f"||X^T Z + Z^T X|| = {res:.3e} exceeds {tol:.0e}")
    return Z


def stiefel_canonical_inner(X, A, B):
    """Canonical metric ``tr(A^T (I - X X^T / 2) B)``.

    Computed without forming the n x n projector.
    """
    X = np.asarray(X, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != X.shape or B.shape != X.shape:
        raise DimensionMismatch("tangent vectors must share the base point's shape")
    return float(np.sum(A * B) - 0.5 * np.sum((X.T @ A) * (X.T @ B)))


def stiefel_project_tangent(X, M):
    """Projection ``M - X (X^T M + M^T X) / 2`` onto the tangent space at ``X``."""
    X = np.asarray(X, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if M.shape != X.shape:
        raise DimensionMismatch(f"{M.shape} != {X.shape}")
    S = X.T @ M
    return M - 0.5 * X @ (S + S.T)


def random_stiefel(rng, n, p):
    from .linalg import qr_orthonormal, rand_gaussian

    return qr_orthonormal(rand_gaussian(rng, n, p))


# ----------------------------------------------------------------- Sphere

def check_sphere_point(x, tol=SPHERE_TOL):
    x = np.asarray(x, dtype=np.float64)
    if abs(np.linalg.norm(x) - 1.0) > tol:
        raise InfeasiblePoint(f"||x|| = {np.linalg.norm(x):.15f} is not 1")
    return x


def check_sphere_tangent(x, v, tol=SPHERE_TOL):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != np.shape(x):
        raise DimensionMismatch(f"{v.shape} != {np.shape(x)}")
    if abs(np.dot(x, v)) > tol:
        raise TangentMismatch(f"<x, v> = {np.dot(x, v):.3e}")
    return v


def sphere_project_tangent(x, v):
    return v - np.dot(x, v) * x


def sphere_exp(x, v):
    """Exponential map of the unit sphere: ``cos|v| x + sin|v| v/|v|``."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    t = np.linalg.norm(v)
    if t == 0.0:
        return x.copy()
    y = np.cos(t) * x + np.sin(t) * (v / t)
    # renormalize to kill the O(eps) drift of cos/sin evaluation
    return y / np.linalg.norm(y)


def sphere_log(x, y):
    """Inverse exponential map; defined for ``y != -x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    c = float(np.dot(x, y))
    w = y - c * x
    s = float(np.linalg.norm(w))
    if s == 0.0:
        if c > 0:
            return np.zeros_like(x)
        raise DegenerateInput("antipodal points have no unique logarithm")
    theta = np.arctan2(s, c)
    return (theta / s) * w


def sphere_distance(x, y):
    c = float(np.dot(x, y))
    s = float(np.linalg.norm(np.asarray(y) - c * np.asarray(x)))
    return float(np.arctan2(s, c))


def sphere_retract(x, v):
    """Projection retraction ``(x + v) / ||x + v||``."""
    w = np.asarray(x, dtype=np.float64) + np.asarray(v, dtype=np.float64)
    nrm = np.linalg.norm(w)
    if nrm < 1e-12:
        raise DegenerateInput("x + v vanishes")
    return w / nrm


# ------------------------------------------------- potentials and Bregman

@dataclass(frozen=True)
class Potential:
    """A strongly convex potential and its conjugate gradient map.

    ``mu`` is a strong-convexity modulus when one holds globally on the
    domain, otherwise ``None``.
    """

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian_apply: Callable[[np.ndarray, np.ndarray], np.ndarray]
    conj_gradient: Callable[[np.ndarray], np.ndarray]
    in_domain: Callable[[np.ndarray], bool]
    mu: Optional[float] = None

    def hessian(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.column_stack([self.hessian_apply(x, e) for e in np.eye(x.size)])


def _everywhere(x):
    return bool(np.all(np.isfinite(x)))


def _positive(x):
    return bool(np.all(np.isfinite(x)) and np.all(np.asarray(x) > 0))


SquaredNorm = Potential(
    name="squared_norm",
    value=lambda x: 0.5 * float(np.dot(x, x)),
    gradient=lambda x: np.array(x, dtype=np.float64),
    hessian_apply=lambda x, v: np.array(v, dtype=np.float64),
    conj_gradient=lambda y: np.array(y, dtype=np.float64),
    in_domain=_everywhere,
    mu=1.0,
)

NegEntropy = Potential(
    name="neg_entropy",
    value=lambda x: float(np.sum(x * np.log(x))),
    gradient=lambda x: 1.0 + np.log(x),
    hessian_apply=lambda x, v: np.asarray(v) / np.asarray(x),
    conj_gradient=lambda y: np.exp(np.asarray(y) - 1.0),
    in_domain=_positive,
)


def _require_domain(p, *points):
    for x in points:
        if not p.in_domain(x):
            raise DomainViolation(f"point outside the domain of {p.name}")


def potential_grad(p, x):
    x = np.asarray(x, dtype=np.float64)
    _require_domain(p, x)
    return p.gradient(x)


def potential_conj_grad(p, y):
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise DomainViolation("non-finite dual point")
    return p.conj_gradient(y)


def bregman_div(p, x, y):
    """``psi(x) - psi(y) - <grad psi(y), x - y>``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} != {y.shape}")
    _require_domain(p, x, y)
    return p.value(x) - p.value(y) - float(np.dot(p.gradient(y), x - y))


@dataclass(frozen=True)
class HessianMetricSpace:
    """Euclidean space carrying the metric ``g_x(u, v) = u^T H_psi(x) v``."""

    potential: Potential
    dim: int

    def metric(self, x):
        _require_domain(self.potential, np.asarray(x))
        return self.potential.hessian(x)

    def inner(self, x, u, v):
        return float(np.dot(u, self.potential.hessian_apply(np.asarray(x), np.asarray(v))))

    def riemannian_gradient(self, x, egrad):
        """Metric gradient ``H(x)^{-1} egrad``."""
        return np.linalg.solve(self.metric(x), np.asarray(egrad, dtype=np.float64))
