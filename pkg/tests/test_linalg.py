import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmdopt.errors import DimensionMismatch, RankDeficient, SingularMatrix
from rmdopt.linalg import SeededRng, qr_orthonormal, rand_gaussian, rand_uniform01, solve_dense


def test_solve_identity():
    M = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(solve_dense(np.eye(3), M), M)


def test_solve_diagonal():
    X = solve_dense(np.array([[2.0, 0], [0, 4]]), np.array([[2.0], [8.0]]))
    np.testing.assert_allclose(X, [[1.0], [2.0]], rtol=0, atol=1e-15)


def test_solve_against_explicit_2x2_inverse():
    W = np.array([[0.0, 1.0], [-1.0, 0.0]])
    A = np.eye(2) + 0.5 * W
    # [[a, b], [c, d]]^{-1} = [[d, -b], [-c, a]] / (ad - bc)
    a, b, c, d = A.ravel()
    inv = np.array([[d, -b], [-c, a]]) / (a * d - b * c)
    np.testing.assert_allclose(solve_dense(A, np.eye(2)), inv, atol=1e-15)
    np.testing.assert_allclose(inv, [[0.8, -0.4], [0.4, 0.8]], atol=1e-15)


def test_solve_errors():
    with pytest.raises(SingularMatrix):
        solve_dense(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))
    with pytest.raises(SingularMatrix):
        solve_dense(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(DimensionMismatch):
        solve_dense(np.ones((2, 3)), np.eye(2))
    with pytest.raises(DimensionMismatch):
        solve_dense(np.eye(3), np.eye(2))


@pytest.mark.parametrize("n", [5, 50, 200])
def test_solve_recovers_solution(n):
    g = SeededRng(n).generator
    A = g.standard_normal((n, n)) + n**0.5 * np.eye(n) * 3
    assert np.linalg.cond(A) < 1e8
    X = g.standard_normal((n, 4))
    B = A @ X
    Y = solve_dense(A, B)
    assert np.linalg.norm(Y - X) <= 1e-9 * np.linalg.norm(X)
    assert np.linalg.norm(A @ Y - B) <= 1e-10 * (1 + np.linalg.norm(B))


def test_qr_examples():
    Q = qr_orthonormal(np.eye(3))
    np.testing.assert_allclose(np.abs(Q), np.eye(3), atol=1e-15)
    q = qr_orthonormal(2.0 * np.array([[1.0], [0.0], [0.0]]))
    np.testing.assert_allclose(np.abs(q[:, 0]), [1.0, 0.0, 0.0], atol=1e-15)


def test_qr_random_orthonormal_and_span():
    M = rand_gaussian(SeededRng(7), 20, 5)
    Q = qr_orthonormal(M)
    assert np.linalg.norm(Q.T @ Q - np.eye(5)) <= 1e-12
    # same span: projecting M onto span(Q) is lossless
    assert np.linalg.norm(M - Q @ (Q.T @ M)) <= 1e-12 * np.linalg.norm(M)


def test_qr_idempotent_up_to_sign():
    Q = qr_orthonormal(rand_gaussian(SeededRng(3), 12, 4))
    Q2 = qr_orthonormal(Q)
    assert np.linalg.norm(np.abs(Q.T @ Q2) - np.eye(4)) <= 1e-12


def test_qr_rank_deficient():
    M = np.ones((4, 2))
    with pytest.raises(RankDeficient):
        qr_orthonormal(M)
    with pytest.raises(DimensionMismatch):
        qr_orthonormal(np.ones((2, 3)))


def test_rng_determinism():
    a = rand_gaussian(SeededRng(42), 2, 2)
    b = rand_gaussian(SeededRng(42), 2, 2)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, rand_gaussian(SeededRng(43), 2, 2))


def test_rng_children_independent_of_sibling_consumption():
    r1, r2 = SeededRng(9), SeededRng(9)
    r1.child("a").generator.standard_normal(1000)
    np.testing.assert_array_equal(
        r1.child("b").generator.standard_normal(5), r2.child("b").generator.standard_normal(5)
    )
    assert not np.array_equal(
        SeededRng(9).child("a").generator.random(3), SeededRng(9).child("b").generator.random(3)
    )


def test_gaussian_moments():
    x = rand_gaussian(SeededRng(1), 1000, 1000)
    assert -0.004 < x.mean() < 0.004
    assert abs(x.var() - 1.0) < 4 * np.sqrt(2 / 1e6)


def test_uniform_moments():
    x = rand_uniform01(SeededRng(1), 1000, 1000)
    assert 0.4988 < x.mean() < 0.5012
    assert abs(x.var() - 1 / 12) < 4 * np.sqrt(1 / 180 / 1e6)
    assert x.min() >= 0 and x.max() < 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(1, 6), st.integers(1, 6))
def test_rng_reproducible_for_any_seed(seed, r, c):
    np.testing.assert_array_equal(rand_uniform01(SeededRng(seed), r, c), rand_uniform01(SeededRng(seed), r, c))
