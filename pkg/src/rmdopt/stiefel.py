"""Curvilinear gradient descent on the Stiefel manifold.

The update is the Cayley-type curve

    Y(eta) = (I + eta/2 W)^{-1} (I - eta/2 W) X,   W = G X^T - X G^T,

where ``G`` is the Euclidean gradient of the objective. ``Y'(0) = -W X`` is
the negative Riemannian gradient, so positive ``eta`` descends.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, OutOfChart, SingularMatrix
from .linalg import solve_dense

SKEW_TOL = 1e-12
DENSE_W_LIMIT = 2000


def skew_residual(W):
    return float(np.linalg.norm(W + W.T))


def check_skew(W, tol=SKEW_TOL):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch(f"skew matrix must be square, got {W.shape}")
    if skew_residual(W) > tol * max(1.0, float(np.linalg.norm(W))):
        raise ValueError("matrix is not skew-symmetric")
    return W


def _check_pair(X, G):
    X = np.asarray(X, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if X.ndim != 2 or G.shape != X.shape:
        raise DimensionMismatch(f"X {X.shape} and G {G.shape} must match")
    return X, G


def skew_factor(X, G):
    """``W = G X^T - X G^T``, antisymmetric to the last bit."""
    X, G = _check_pair(X, G)
    M = G @ X.T
    return M - M.T


def riemannian_gradient_stiefel(X, G):
    """Return ``(W, W X)``: the skew factor and the Riemannian gradient."""
    W = skew_factor(X, G)
    return W, W @ X


def riemannian_gradient_lowrank(X, G):
    """``W X = G - X G^T X`` without forming the n x n factor."""
    X, G = _check_pair(X, G)
    return G - X @ (G.T @ X)


def cayley(W):
    """Cayley transform ``(I - W)^{-1} (I + W)``."""
    W = check_skew(W)
    I = np.eye(W.shape[0])
    return solve_dense(I - W, I + W)


def cayley_inverse(Q):
    """Inverse Cayley transform ``(Q - I)(Q + I)^{-1}`` on the chart ``Q + I`` invertible."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DimensionMismatch(f"need a square matrix, got {Q.shape}")
    I = np.eye(Q.shape[0])
    try:
        # S (Q + I) = Q - I  <=>  (Q + I)^T S^T = (Q - I)^T
        S = solve_dense((Q + I).T, (Q - I).T).T
    except SingularMatrix as exc:
        raise OutOfChart("Q + I is singular") from exc
    return 0.5 * (S - S.T)


def cayley_step_matrix(W, eta, descent=True):
    """The n x n factor applied by one update; orthogonal for skew ``W``."""
    W = np.asarray(W, dtype=np.float64)
    I = np.eye(W.shape[0])
    a = 0.5 * eta if descent else -0.5 * eta
    return solve_dense(I + a * W, I - a * W)


def cgd_update(X, W, eta, descent=True):
    """Solve ``(I + eta/2 W) Y = (I - eta/2 W) X``.

    With ``descent=False`` the sign of ``eta`` is flipped, which gives the
    factor order ``(I + eta/2 W)(I - eta/2 W)^{-1}`` printed in some
    statements of the stochastic algorithm (an ascent step for this ``W``).
    """
    X = np.asarray(X, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    n = X.shape[0]
    if W.shape != (n, n):
        raise DimensionMismatch(f"W {W.shape} incompatible with X {X.shape}")
    a = 0.5 * eta if descent else -0.5 * eta
    rhs = X - a * (W @ X)
    return solve_dense(np.eye(n) + a * W, rhs)


def cgd_update_smw(X, G, eta):
    """Low-rank form of :func:`cgd_update` via Sherman-Morrison-Woodbury.

    With ``U = [G, X]`` and ``V = [X, -G]`` so that ``W = U V^T``::

        Y = X - eta U (I_{2p} + eta/2 V^T U)^{-1} V^T X

    Only a 2p x 2p system is solved. Falls back to the dense path when
    ``2p >= n``.
    """
    X, G = _check_pair(X, G)
    n, p = X.shape
    if 2 * p >= n:
        return cgd_update(X, skew_factor(X, G), eta)
    U = np.hstack([G, X])
    V = np.hstack([X, -G])
    VtU = V.T @ U
    VtX = V.T @ X
    Z = solve_dense(np.eye(2 * p) + 0.5 * eta * VtU, VtX)
    return X - eta * (U @ Z)


def descent_slope(G, direction):
    """``<G, D>`` for an update curve with initial velocity ``-D``."""
    return float(np.sum(G * direction))
