"""Read-only diagnostics: gradient checks, estimator unbiasedness, rate fits,
and the sphere retraction regularity probe."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import manifolds as mf
from .errors import NonpositiveMetric
from .linalg import SeededRng
from .scgd import embed_blocks, block_skew_set, equal_partitions, same_block_probability, split_even
from .solver import run_solver
from .stiefel import skew_factor


def fd_gradient_check(problem, X, h=1e-6, rng=None, directions=20):
    """Max over random unit tangent directions of ``|<G, D> - FD| / (1 + |FD|)``.

    ``FD`` is the central difference of ``f`` in the ambient space along ``D``.
    """
    rng = rng or SeededRng(0)
    X = np.asarray(X, dtype=np.float64)
    _, G = problem.value_grad(X)
    worst = 0.0
    for _ in range(directions):
        M = rng.generator.standard_normal(X.shape)
        if getattr(problem, "manifold", "stiefel") == "stiefel":
            M = mf.stiefel_project_tangent(X, M)
        D = M / np.linalg.norm(M)
        fd = (problem.value(X + h * D) - problem.value(X - h * D)) / (2 * h)
        worst = max(worst, abs(float(np.sum(G * D)) - fd) / (1.0 + abs(fd)))
    return worst


@dataclass
class UnbiasednessReport:
    n: int
    K: int
    trials: int
    deviation: float
    band: float
    exhaustive: bool
    passed: bool


def unbiasedness_mc(n, p, K, trials, rng, exhaustive=False):
    """Average the scaled block estimate of ``W`` and compare with ``W``.

    In Monte-Carlo mode every entry must sit within ``5 * std / sqrt(trials)``
    of the truth; ``deviation`` and ``band`` report the worst entry's
    distance and the band at that entry; ``passed`` is the entrywise
    verdict. In exhaustive mode (``K | n``) the
    average runs over all equal-size partitions and the band is ``1e-12``.
    """
    X = mf.random_stiefel(rng.child("X"), n, p)
    G = rng.child("G").generator.standard_normal((n, p))
    W = skew_factor(X, G)
    if exhaustive:
        parts = list(equal_partitions(n, K))
        scale = 1.0 / same_block_probability(parts[0])
        mean = sum(embed_blocks(block_skew_set(X, G, q), q) for q in parts) * (scale / len(parts))
        dev = float(np.max(np.abs(mean - W)))
        return UnbiasednessReport(n, K, len(parts), dev, 1e-12, True, dev <= 1e-12)

    # vectorized: a same-block mask per trial
    gen = rng.child("partitions").generator
    scale = 1.0 / same_block_probability(split_even(np.arange(n), K))
    chunk_labels = np.concatenate([np.full(len(c), k) for k, c in enumerate(np.array_split(np.arange(n), K))])
    # every estimate entry is either scale * W_ij or 0, so the same-block
    # frequency determines the sample mean and variance exactly
    hits = np.zeros((n, n), dtype=np.int64)
    done = 0
    while done < trials:
        m = min(20000, trials - done)
        perms = gen.permuted(np.tile(np.arange(n), (m, 1)), axis=1)
        labels = np.empty_like(perms)
        np.put_along_axis(labels, perms, chunk_labels[None, :], axis=1)
        hits += (labels[:, :, None] == labels[:, None, :]).sum(axis=0)
        done += m
    freq = hits / trials
    mean = (scale * freq) * W
    var = (scale * W) ** 2 * freq * (1.0 - freq) * trials / max(trials - 1, 1)
    band = 5.0 * np.sqrt(var) / np.sqrt(trials)
    err = np.abs(mean - W)
    # scale-aware slack for entries with zero variance (diagonal, K = 1)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(W))))
    passed = bool(np.all(err <= band + slack))
    worst = int(np.argmax(err))
    return UnbiasednessReport(n, K, trials, float(err.flat[worst]), float(band.flat[worst] + slack), False, passed)


@dataclass
class RateFitReport:
    budgets: list
    values: list
    slope: float
    intercept: float
    r2: float
    metric: str


def fit_power_law(budgets, values, metric="custom"):
    """Least-squares line through ``(log T, log value)``."""
    T = np.asarray(budgets, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if len(T) < 4:
        raise ValueError("need at least 4 budgets")
    if np.any(v <= 0):
        raise NonpositiveMetric("metric must be positive to take logs")
    x, y = np.log(T), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFitReport(list(map(int, T)), list(map(float, v)), float(slope), float(intercept), r2, metric)


def rate_fit(problem, budgets, config, metric="gap"):
    """Fixed-budget runs at each ``T`` in ``budgets``; fit the decay exponent.

    ``metric="gap"`` uses ``f(x_T) - f_opt``; ``metric="msg"`` uses the running
    mean of squared Riemannian gradient norms ``(1/T) sum_{t=1..T} ||grad f(x_t)||^2``.
    Budgets from the first nonpositive gap onward are dropped.
    """
    budgets = sorted(int(T) for T in budgets)
    if len(budgets) < 4:
        raise ValueError("need at least 4 budgets")
    kept, values = [], []
    for T in budgets:
        cfg = dataclasses.replace(config, max_iters=T, fixed_budget=True)
        _, trace = run_solver(problem, cfg)
        if metric == "gap":
            v = trace.records[-1].f - problem.f_opt
        elif metric == "msg":
            v = float(np.mean([r.grad_norm**2 for r in trace.records[1:]]))
        else:
            raise ValueError(f"unknown metric {metric!r}")
        if v <= 0:
            break
        kept.append(T)
        values.append(v)
    if len(kept) < 4:
        raise NonpositiveMetric(f"only {len(kept)} budgets left with a positive metric")
    return fit_power_law(kept, values, metric)


@dataclass
class RetractionProbeReport:
    ts: list
    gaps: list
    max_ratio: float
    exponent: float


def retraction_regularity_probe(samples=20, rng=None, dim=3, ts=None):
    """Gap between the sphere's projection retraction and the exponential map.

    For unit tangent ``u`` and scale ``t`` the gap is
    ``||Log_x(R_x(t u)) - t u||``; the report carries the largest
    ``gap / t^2`` seen and the log-log slope of the worst gap against ``t``.
    """
    rng = rng or SeededRng(0)
    ts = np.logspace(-3, -1, 9) if ts is None else np.asarray(ts, dtype=np.float64)
    gaps = np.zeros(len(ts))
    max_ratio = 0.0
    for _ in range(samples):
        x = rng.generator.standard_normal(dim)
        x /= np.linalg.norm(x)
        u = mf.sphere_project_tangent(x, rng.generator.standard_normal(dim))
        u /= np.linalg.norm(u)
        for i, t in enumerate(ts):
            g = float(np.linalg.norm(mf.sphere_log(x, mf.sphere_retract(x, t * u)) - t * u))
            gaps[i] = max(gaps[i], g)
            max_ratio = max(max_ratio, g / t**2)
    pos = gaps > 0
    exponent = float(np.polyfit(np.log(ts[pos]), np.log(gaps[pos]), 1)[0]) if pos.sum() >= 2 else float("inf")
    return RetractionProbeReport(list(map(float, ts)), list(map(float, gaps)), max_ratio, exponent)
