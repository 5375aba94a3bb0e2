import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmdopt.errors import DegenerateScale, DimensionMismatch, InvalidK
from rmdopt.linalg import SeededRng
from rmdopt.manifolds import stiefel_residual
from rmdopt.problems import eig_generate
from rmdopt.scgd import (
    BlockPartition,
    block_direction,
    block_skew_set,
    embed_blocks,
    equal_partitions,
    estimate_full_skew,
    sample_partition,
    same_block_probability,
    scgd_step,
    split_even,
    unbiased_scale,
)
from rmdopt.stiefel import cgd_update, skew_factor

from conftest import stiefel


@pytest.mark.parametrize("n,K", [(10, 3), (7, 7), (5, 1), (600, 6), (13, 4)])
def test_partition_sizes(n, K):
    part = sample_partition(n, K, SeededRng(n + K))
    assert part.K == K
    assert max(part.sizes) - min(part.sizes) <= 1
    assert sorted(np.concatenate(part.blocks).tolist()) == list(range(n))
    for b in part.blocks:
        assert np.all(np.diff(b) > 0)


def test_partition_invalid_k():
    rng = SeededRng(0)
    for K in (0, 6, -1):
        with pytest.raises(InvalidK):
            sample_partition(5, K, rng)
    with pytest.raises(InvalidK):
        list(equal_partitions(5, 2))
    with pytest.raises(ValueError):
        BlockPartition(3, (np.array([0, 1]), np.array([1, 2])))


def test_same_block_frequency():
    rng = SeededRng(11)
    trials = 100_000
    hits = 0
    for _ in range(trials):
        lab = sample_partition(6, 3, rng).labels()
        hits += lab[0] == lab[1]
    assert abs(hits / trials - 0.2) <= 0.016
    assert same_block_probability(split_even(np.arange(6), 3)) == pytest.approx(0.2)


def test_sampling_uniform_over_equal_partitions():
    rng = SeededRng(2)
    counts = {}
    for _ in range(6000):
        key = tuple(tuple(b.tolist()) for b in sorted(sample_partition(4, 2, rng).blocks, key=lambda b: b[0]))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 3
    for c in counts.values():
        assert abs(c / 6000 - 1 / 3) < 0.03


def test_equal_partition_count():
    # n! / ((n/K)!^K K!)
    assert len(list(equal_partitions(6, 3))) == 15
    assert len(list(equal_partitions(6, 2))) == 10
    assert len(list(equal_partitions(8, 4))) == 105


def test_block_skew_set_matches_mask():
    X = stiefel(9, 3, seed=1)
    G = SeededRng(3).generator.standard_normal((9, 3))
    part = sample_partition(9, 3, SeededRng(4))
    W = skew_factor(X, G)
    mask = part.labels()[:, None] == part.labels()[None, :]
    np.testing.assert_allclose(embed_blocks(block_skew_set(X, G, part), part), W * mask, atol=1e-15)
    one = split_even(np.arange(9), 1)
    np.testing.assert_allclose(embed_blocks(block_skew_set(X, G, one), one), W, atol=1e-15)
    with pytest.raises(DimensionMismatch):
        block_skew_set(X, G[:, :2], part)


def test_unbiased_scale_values():
    assert unbiased_scale(split_even(np.arange(4), 2)) == pytest.approx(3.0)
    assert unbiased_scale(split_even(np.arange(7), 1)) == 1.0
    assert unbiased_scale(split_even(np.arange(5), 2)) == pytest.approx(2.5)
    with pytest.raises(DegenerateScale):
        unbiased_scale(split_even(np.arange(4), 4))


@pytest.mark.parametrize(
    "n,K", [(n, K) for n in range(2, 9) for K in range(1, n) if n % K == 0]
)
def test_exhaustive_unbiasedness(n, K):
    p = max(1, n // 2)
    X = stiefel(n, p, seed=n * 10 + K)
    G = SeededRng(n * 7 + K).generator.standard_normal((n, p))
    parts = list(equal_partitions(n, K))
    mean = sum(estimate_full_skew(block_skew_set(X, G, q), q) for q in parts) / len(parts)
    assert np.max(np.abs(mean - skew_factor(X, G))) <= 1e-12


def test_mc_unbiasedness_uneven():
    # n = 12, K = 5 gives blocks of sizes 3,3,2,2,2
    n, K, trials = 12, 5, 20_000
    X = stiefel(n, 3, seed=0)
    G = SeededRng(1).generator.standard_normal((n, 3))
    W = skew_factor(X, G)
    rng = SeededRng(2)
    acc = np.zeros((n, n))
    sq = np.zeros((n, n))
    for _ in range(trials):
        q = sample_partition(n, K, rng)
        E = estimate_full_skew(block_skew_set(X, G, q), q)
        acc += E
        sq += E**2
    mean = acc / trials
    std = np.sqrt(np.maximum(sq / trials - mean**2, 0.0))
    assert np.all(np.abs(mean - W) <= 5 * std / np.sqrt(trials) + 1e-12)


def test_k1_equals_cgd():
    X = stiefel(30, 5, seed=2)
    G = SeededRng(5).generator.standard_normal((30, 5))
    part = sample_partition(30, 1, SeededRng(0))
    for eta in (1e-3, 0.1, 1.0):
        np.testing.assert_allclose(scgd_step(X, G, eta, part), cgd_update(X, skew_factor(X, G), eta), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 40),
    p_frac=st.floats(0.05, 1.0),
    K=st.integers(1, 8),
    eta=st.floats(1e-4, 10.0),
    seed=st.integers(0, 2**31),
)
def test_scgd_feasibility_fuzz(n, p_frac, K, eta, seed):
    K = min(K, n)
    p = max(1, int(p_frac * n))
    X = stiefel(n, p, seed=seed)
    G = SeededRng(seed).child("G").generator.standard_normal((n, p))
    part = sample_partition(n, K, SeededRng(seed).child("part"))
    for unbiased in (False, True):
        if unbiased and max(part.sizes) == 1:
            continue
        Y = scgd_step(X, G, eta, part, scale_unbiased=unbiased)
        assert stiefel_residual(Y) <= 1e-10


def test_zero_skew_leaves_x():
    X = stiefel(12, 3, seed=4)
    part = sample_partition(12, 4, SeededRng(1))
    np.testing.assert_array_equal(scgd_step(X, np.zeros_like(X), 0.5, part), X)
    # G = X S with S symmetric makes every W_k vanish only if blocks match;
    # the full W = X S X^T - X S X^T = 0, and K = 1 keeps X fixed
    S = np.diag([1.0, 2.0, 3.0])
    one = split_even(np.arange(12), 1)
    np.testing.assert_allclose(scgd_step(X, X @ S, 0.5, one), X, atol=1e-14)


def test_threads_identical(monkeypatch):
    X = stiefel(60, 4, seed=1)
    G = SeededRng(1).generator.standard_normal((60, 4))
    part = sample_partition(60, 6, SeededRng(2))
    serial = scgd_step(X, G, 0.1, part, threads=1)
    np.testing.assert_array_equal(scgd_step(X, G, 0.1, part, threads=4), serial)
    monkeypatch.setenv("RMDOPT_THREADS", "3")
    np.testing.assert_array_equal(scgd_step(X, G, 0.1, part), serial)


def test_block_direction_is_masked_wx():
    X = stiefel(10, 2, seed=3)
    G = SeededRng(4).generator.standard_normal((10, 2))
    part = sample_partition(10, 2, SeededRng(5))
    What = embed_blocks(block_skew_set(X, G, part), part)
    np.testing.assert_allclose(block_direction(X, G, part), What @ X, atol=1e-14)
    # first-order velocity of the update curve
    h = 1e-6
    fd = (scgd_step(X, G, h, part) - scgd_step(X, G, -h, part)) / (2 * h)
    np.testing.assert_allclose(fd, -What @ X, atol=1e-7)


def test_expected_descent():
    problem = eig_generate(40, 4, SeededRng(0))
    X = problem.initial_point(SeededRng(1))
    f0, G = problem.value_grad(X)
    decreases = []
    for s in range(100):
        part = sample_partition(40, 4, SeededRng(s))
        decreases.append(f0 - problem.value(scgd_step(X, G, 1e-2, part)))
    assert np.mean(decreases) > 0
