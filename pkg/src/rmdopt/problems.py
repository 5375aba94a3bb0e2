"""Benchmark objectives on the Stiefel manifold, plus a Euclidean quadratic.

Every problem exposes ``value_grad(X) -> (f, G)`` with ``G`` the Euclidean
gradient, an ``initial_point(rng)``, and the optimal value ``f_opt``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .linalg import qr_orthonormal, rand_gaussian, rand_uniform01
from .manifolds import random_stiefel


def _check_shape(X, shape):
    X = np.asarray(X, dtype=np.float64)
    if X.shape != shape:
        raise DimensionMismatch(f"expected {shape}, got {X.shape}")
    return X


@dataclass(frozen=True)
class EigProblem:
    """Minimize ``-tr(X^T A X)`` over St(n, p); the optimum is minus the top-p eigenvalue sum."""

    A: np.ndarray
    p: int
    f_opt: float = field(default=None)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch("A must be square")
        if np.linalg.norm(A - A.T) > 1e-10 * max(1.0, np.linalg.norm(A)):
            raise ValueError("A must be symmetric")
        if not 1 <= self.p <= A.shape[0]:
            raise DimensionMismatch("need 1 <= p <= n")
        object.__setattr__(self, "A", A)
        if self.f_opt is None:
            evals = np.linalg.eigvalsh(A)
            object.__setattr__(self, "f_opt", -float(np.sum(evals[::-1][: self.p])))

    name = "eig"
    manifold = "stiefel"

    @property
    def shape(self):
        return (self.A.shape[0], self.p)

    def value(self, X):
        X = _check_shape(X, self.shape)
        return -float(np.sum(X * (self.A @ X)))

    def value_grad(self, X):
        X = _check_shape(X, self.shape)
        AX = self.A @ X
        return -float(np.sum(X * AX)), -2.0 * AX

    def initial_point(self, rng):
        return random_stiefel(rng, *self.shape)

    def optimizer(self):
        """Top-p eigenvector frame."""
        _, V = np.linalg.eigh(self.A)
        return V[:, ::-1][:, : self.p].copy()


def eig_generate(n, p, rng):
    """``A = N^T N`` with ``N`` an n x n standard Gaussian matrix."""
    if not 1 <= p <= n:
        raise DimensionMismatch("need n >= p >= 1")
    N = rand_gaussian(rng, n, n)
    A = N.T @ N
    return EigProblem(0.5 * (A + A.T), p)


@dataclass(frozen=True)
class ProcrustesProblem:
    """Minimize ``||A X - B||_F^2`` over St(n, p) with a planted optimum ``X_star``."""

    A: np.ndarray
    B: np.ndarray
    X_star: np.ndarray
    f_opt: float = 0.0

    name = "procrustes"
    manifold = "stiefel"

    @property
    def shape(self):
        return self.B.shape

    def value(self, X):
        R = self.A @ _check_shape(X, self.shape) - self.B
        return float(np.sum(R * R))

    def value_grad(self, X):
        R = self.A @ _check_shape(X, self.shape) - self.B
        return float(np.sum(R * R)), 2.0 * (self.A.T @ R)

    def initial_point(self, rng):
        return random_stiefel(rng, *self.shape)

    def optimizer(self):
        return self.X_star.copy()


def procrustes_generate(n, p, rng):
    """Uniform(0, 1) ``A``, ``X_star`` from QR of a Gaussian matrix, ``B = A X_star``."""
    if not 1 <= p <= n:
        raise DimensionMismatch("need n >= p >= 1")
    A = rand_uniform01(rng.child("A"), n, n)
    X_star = qr_orthonormal(rand_gaussian(rng.child("X_star"), n, p))
    return ProcrustesProblem(A, A @ X_star, X_star)


@dataclass(frozen=True)
class QuadraticProblem:
    """Unconstrained ``0.5 x^T H x - b^T x`` on R^n, for the Euclidean mirror."""

    H: np.ndarray
    b: np.ndarray

    name = "quadratic"
    manifold = "euclidean"

    @property
    def shape(self):
        return self.b.shape

    @property
    def f_opt(self):
        return self.value(self.optimizer())

    def value(self, x):
        x = _check_shape(x, self.shape)
        return float(0.5 * x @ (self.H @ x) - self.b @ x)

    def value_grad(self, x):
        x = _check_shape(x, self.shape)
        Hx = self.H @ x
        return float(0.5 * x @ Hx - self.b @ x), Hx - self.b

    def initial_point(self, rng):
        return rng.generator.standard_normal(self.shape)

    def optimizer(self):
        return np.linalg.solve(self.H, self.b)


def quadratic_generate(n, rng):
    """SPD ``H = N^T N / n + I`` and Gaussian ``b``."""
    N = rand_gaussian(rng, n, n)
    H = N.T @ N / n + np.eye(n)
    return QuadraticProblem(0.5 * (H + H.T), rng.generator.standard_normal(n))


def generate(name, n, p, rng):
    if name == "eig":
        return eig_generate(n, p, rng)
    if name == "procrustes":
        return procrustes_generate(n, p, rng)
    if name == "quadratic":
        return quadratic_generate(n, rng)
    raise ValueError(f"unknown problem {name!r}")
