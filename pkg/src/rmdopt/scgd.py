"""Stochastic curvilinear gradient descent with random block partitions.

Each iteration splits the row indices into ``K`` random near-even blocks and
keeps only the within-block entries of the skew factor ``W``. The masked
matrix is block diagonal, so the Cayley update decouples into ``K`` small
independent solves.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScale, DimensionMismatch, InvalidK
from .linalg import solve_dense
from .stiefel import skew_factor

THREADS_ENV = "RMDOPT_THREADS"


@dataclass(frozen=True)
class BlockPartition:
    n: int
    blocks: tuple

    def __post_init__(self):
        seen = np.concatenate([np.asarray(b) for b in self.blocks])
        if seen.size != self.n or not np.array_equal(np.sort(seen), np.arange(self.n)):
            raise ValueError("blocks must partition range(n)")

    @property
    def K(self):
        return len(self.blocks)

    @property
    def sizes(self):
        return [len(b) for b in self.blocks]

    def labels(self):
        out = np.empty(self.n, dtype=np.intp)
        for k, b in enumerate(self.blocks):
            out[b] = k
        return out


def split_even(order, K):
    """Cut ``order`` into ``K`` consecutive chunks whose sizes differ by at most one."""
    n = len(order)
    if not 1 <= K <= n:
        raise InvalidK(f"need 1 <= K <= n, got K={K}, n={n}")
    return BlockPartition(n, tuple(np.sort(c) for c in np.array_split(np.asarray(order), K)))


def sample_partition(n, K, rng):
    """Uniformly random near-even partition of ``range(n)`` into ``K`` blocks."""
    if not 1 <= K <= n:
        raise InvalidK(f"need 1 <= K <= n, got K={K}, n={n}")
    return split_even(rng.permutation(n), K)


def equal_partitions(n, K):
    """Enumerate every partition of ``range(n)`` into ``K`` unlabeled blocks of size n/K."""
    if K < 1 or n % K:
        raise InvalidK(f"K={K} must divide n={n}")
    m = n // K

    def rec(rest):
        if not rest:
            yield ()
            return
        head, tail = rest[0], rest[1:]
        for others in itertools.combinations(tail, m - 1):
            block = (head,) + others
            remaining = tuple(i for i in tail if i not in others)
            for more in rec(remaining):
                yield (np.array(block),) + more

    for blocks in rec(tuple(range(n))):
        yield BlockPartition(n, blocks)


def same_block_probability(part):
    """Probability that two distinct indices fall in the same block."""
    n = part.n
    if n < 2:
        return 1.0
    return sum(s * (s - 1) for s in part.sizes) / (n * (n - 1))


def unbiased_scale(part):
    """Factor making the scaled block-masked ``W`` an unbiased estimate of ``W``."""
    prob = same_block_probability(part)
    if prob == 0.0:
        raise DegenerateScale("all blocks have size 1")
    return 1.0 / prob


def block_skew_set(X, G, part):
    """Per-block skew factors ``W_k = G_k X_k^T - X_k G_k^T``."""
    X = np.asarray(X, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if G.shape != X.shape or X.shape[0] != part.n:
        raise DimensionMismatch(f"X {X.shape}, G {G.shape}, partition over {part.n}")
    return [skew_factor(X[b], G[b]) for b in part.blocks]


def embed_blocks(blocks, part):
    out = np.zeros((part.n, part.n))
    for b, Wk in zip(part.blocks, blocks):
        out[np.ix_(b, b)] = Wk
    return out


def estimate_full_skew(blocks, part):
    """Embed the blocks into an n x n matrix and apply the unbiased scale."""
    return unbiased_scale(part) * embed_blocks(blocks, part)


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _block_update(Xk, Gk, a):
    Wk = skew_factor(Xk, Gk)
    m = Wk.shape[0]
    return solve_dense(np.eye(m) + a * Wk, Xk - a * (Wk @ Xk))


def scgd_step(X, G, eta, part, scale_unbiased=False, threads=None):
    """One block-diagonal Cayley update.

    Each row block is replaced by ``(I + a W_k)^{-1} (I - a W_k) X_k`` with
    ``a = eta/2`` (times :func:`unbiased_scale` when ``scale_unbiased``).
    Block solves run on a thread pool when ``threads > 1`` (default from the
    ``RMDOPT_THREADS`` environment variable); results do not depend on it.
    """
    X = np.asarray(X, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if G.shape != X.shape or X.shape[0] != part.n:
        raise DimensionMismatch(f"X {X.shape}, G {G.shape}, partition over {part.n}")
    a = 0.5 * eta * (unbiased_scale(part) if scale_unbiased else 1.0)
    threads = _threads() if threads is None else threads
    jobs = [(X[b], G[b]) for b in part.blocks]
    if threads > 1 and part.K > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: _block_update(*job, a), jobs))
    else:
        results = [_block_update(Xk, Gk, a) for Xk, Gk in jobs]
    Y = np.empty_like(X)
    for b, Yk in zip(part.blocks, results):
        Y[b] = Yk
    return Y


def block_direction(X, G, part, scale_unbiased=False):
    """Initial velocity (negated) of the SCGD curve: ``c * W_hat X`` row-blockwise."""
    c = unbiased_scale(part) if scale_unbiased else 1.0
    D = np.empty_like(np.asarray(X, dtype=np.float64))
    for b in part.blocks:
        D[b] = c * (skew_factor(X[b], G[b]) @ X[b])
    return D
