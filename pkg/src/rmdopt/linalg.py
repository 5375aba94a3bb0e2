"""Dense real linear algebra and seeded randomness.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The helpers
here add the shape and finiteness checks the rest of the package relies on.
"""
from __future__ import annotations

import hashlib
import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, RankDeficient, SingularMatrix

PIVOT_RTOL = 1e-14
RANK_RTOL = 1e-12


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float64 array."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def solve_dense(A, B):
    """Solve ``A X = B`` by partial-pivot LU.

    Raises
    ------
    SingularMatrix
        If a pivot of the factorization is below ``1e-14 * max|A|``.
    DimensionMismatch
        If ``A`` is not square or ``B`` has the wrong number of rows.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if B.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"A is {A.shape}, B has {B.shape[0]} rows")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if not np.isfinite(scale) or not np.all(np.isfinite(B)):
        raise ValueError("non-finite entries in linear system")
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    with warnings.catch_warnings():
        # singularity is reported through SingularMatrix below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < PIVOT_RTOL * scale:
        raise SingularMatrix("pivot below threshold")
    return scipy.linalg.lu_solve((lu, piv), B, check_finite=False)


def qr_orthonormal(M):
    """Q factor of the thin QR decomposition of a full-column-rank ``M``."""
    M = as_matrix(M, "M")
    n, p = M.shape
    if n < p:
        raise DimensionMismatch(f"need n >= p, got {M.shape}")
    Q, R = np.linalg.qr(M, mode="reduced")
    if np.min(np.abs(np.diag(R))) <= RANK_RTOL * np.linalg.norm(M):
        raise RankDeficient("R has a vanishing diagonal entry")
    return Q


def _label_key(label):
    digest = hashlib.blake2b(str(label).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class SeededRng:
    """Deterministic, splittable random stream.

    Backed by the counter-based Philox generator. ``child(label)`` derives a
    stream from ``(seed, path, label)`` only, so siblings never depend on how
    much of each other's stream was consumed.
    """

    def __init__(self, seed, _path=()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._path = tuple(_path)
        ss = np.random.SeedSequence([self.seed, *self._path])
        self.generator = np.random.Generator(np.random.Philox(ss))

    def child(self, label):
        return SeededRng(self.seed, self._path + (_label_key(label),))

    def draw_seed(self):
        """One draw: a 63-bit integer suitable for seeding a sub-stream."""
        return int(self.generator.integers(0, 2**63))

    def permutation(self, n):
        return self.generator.permutation(n)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, path={self._path})"


def rand_gaussian(rng, rows, cols):
    return rng.generator.standard_normal((rows, cols))


def rand_uniform01(rng, rows, cols):
    return rng.generator.random((rows, cols))
