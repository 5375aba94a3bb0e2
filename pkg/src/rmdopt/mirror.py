"""Riemannian mirror descent step kernel and concrete mirror maps.

A step maps the iterate into a reparameterized space with ``forward``, takes
a retraction step along ``-eta * differential(grad)`` there, and pulls the
result back with ``inverse``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import manifolds as mf
from .errors import DomainViolation, OutOfChart, SingularMatrix
from .linalg import solve_dense


@dataclass(frozen=True)
class MirrorMap:
    """Local diffeomorphism bundle for one mirror-descent step.

    ``differential(x, v)`` is the action of the map's differential at ``x``.
    Charts re-centered at a base point ignore ``x`` and use ``base``.
    ``radius`` bounds the dual step length for which ``inverse`` is valid.
    """

    name: str
    forward: Callable
    differential: Callable
    dual_retract: Callable
    inverse: Callable
    base: Optional[np.ndarray] = None
    radius: float = math.inf


@dataclass(frozen=True)
class GradientOracle:
    """Riemannian gradient plus an unbiased stochastic estimate of it.

    ``stochastic(x, generator)`` receives a ``numpy.random.Generator``.
    """

    deterministic: Callable
    stochastic: Callable
    sigma2: Optional[float] = None


def _add(y, w):
    return y + w


def rmd_step(x, grad, eta, m):
    """``inverse(dual_retract(forward(x), -eta * differential(x, grad)))``."""
    if eta <= 0:
        raise ValueError("step size must be positive")
    dual_step = -eta * m.differential(x, np.asarray(grad, dtype=np.float64))
    length = np.linalg.norm(dual_step)
    if not np.isfinite(length):
        raise FloatingPointError("dual step overflowed")
    if length >= m.radius:
        raise OutOfChart(f"dual step length {length:.4g} >= radius {m.radius:.4g}")
    y = m.dual_retract(m.forward(x), dual_step)
    return m.inverse(y)


def srmd_step(x, oracle, eta, m, rng):
    """Mirror step with a stochastic gradient; takes exactly one draw from ``rng``."""
    sub = np.random.default_rng(rng.draw_seed())
    return rmd_step(x, oracle.stochastic(x, sub), eta, m)


# ------------------------------------------------------------- instances

def make_euclidean_mirror(potential):
    """Classical mirror descent: forward = grad psi, inverse = grad psi*.

    ``grad`` passed to :func:`rmd_step` is the gradient in the Hessian metric
    of ``psi``; the differential (the Hessian of ``psi``) maps it back to the
    Euclidean gradient, so the dual update is ``grad psi(x) - eta * egrad``.
    """
    return MirrorMap(
        name=f"euclidean[{potential.name}]",
        forward=lambda x: mf.potential_grad(potential, x),
        differential=lambda x, v: potential.hessian_apply(np.asarray(x, dtype=np.float64), v),
        dual_retract=_add,
        inverse=lambda y: mf.potential_conj_grad(potential, y),
    )


def make_simplex_mirror():
    """Exponentiated gradient on the probability simplex.

    Negative-entropy mirror step followed by renormalization, i.e. the
    multiplicative-weights update ``x_i exp(-eta g_i) / Z``. Intended as a
    closed-form test instance.
    """
    def inverse(y):
        z = np.exp(y - np.max(y))
        return z / z.sum()

    def forward(x):
        x = np.asarray(x, dtype=np.float64)
        if not np.all(x > 0) or abs(x.sum() - 1.0) > 1e-10:
            raise DomainViolation("point is not in the open simplex")
        return 1.0 + np.log(x)

    return MirrorMap(
        name="simplex_eg",
        forward=forward,
        differential=lambda x, v: np.asarray(v) / np.asarray(x),
        dual_retract=_add,
        inverse=inverse,
    )


def make_exp_mirror(x_t, radius=math.pi - 1e-6):
    """Sphere chart given by the inverse exponential map at ``x_t``.

    The resulting step is geodesic gradient descent ``Exp_x(-eta grad)``.
    """
    x_t = mf.check_sphere_point(x_t)
    if not 0 < radius < math.pi:
        raise ValueError("radius must lie in (0, pi)")

    def inverse(v):
        if np.linalg.norm(v) >= radius:
            raise OutOfChart("dual point outside the exponential chart")
        return mf.sphere_exp(x_t, v)

    def forward(x):
        # exact zero at the base point so a step reproduces Exp_x bit for bit
        if np.array_equal(x, x_t):
            return np.zeros_like(x_t)
        return mf.sphere_log(x_t, x)

    return MirrorMap(
        name="exp_sphere",
        forward=forward,
        differential=lambda x, v: np.asarray(v, dtype=np.float64),
        dual_retract=_add,
        inverse=inverse,
        base=x_t,
        radius=radius,
    )


def make_cayley_mirror(X0):
    """Cayley chart of the orthogonal group centered at ``X0``.

    forward(X) = (X X0^T - I)(X X0^T + I)^{-1}, a skew matrix with
    forward(X0) = 0; the differential at X0 is ``V -> (V X0^T) / 2``
    (skew-projected, which is exact for tangent ``V``);
    the dual retraction is addition in skew(n); and
    inverse(S) = (I - S)^{-1}(I + S) X0.
    """
    X0 = mf.check_stiefel(X0)
    n, p = X0.shape
    if n != p:
        raise ValueError("the Cayley mirror needs a square orthogonal base point")
    I = np.eye(n)

    def forward(X):
        if np.array_equal(X, X0):
            return np.zeros((n, n))
        Q = np.asarray(X) @ X0.T
        # Q + I has norm <= 2 on the group, so an absolute singular-value floor is meaningful
        if np.linalg.svd(Q + I, compute_uv=False)[-1] < 1e-10:
            raise OutOfChart("X X0^T has eigenvalue -1")
        try:
            S = solve_dense((Q + I).T, (Q - I).T).T
        except SingularMatrix as exc:
            raise OutOfChart("X X0^T + I is singular") from exc
        # keep only the skew part: a symmetric residue from rounding would be
        # amplified by the inverse map on every step
        return 0.5 * (S - S.T)

    def differential(X, V):
        D = 0.5 * (np.asarray(V) @ X0.T)
        return 0.5 * (D - D.T)

    def inverse(S):
        try:
            return solve_dense(I - S, (I + S) @ X0)
        except SingularMatrix as exc:
            raise OutOfChart("I - S is singular") from exc

    return MirrorMap(
        name="cayley",
        forward=forward,
        differential=differential,
        dual_retract=_add,
        inverse=inverse,
        base=X0,
    )
