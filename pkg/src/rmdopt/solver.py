"""Iteration driver: step-size policies, stopping rules, line search, traces."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from . import manifolds as mf
from .errors import ConfigError, OutOfChart, SingularMatrix, SolverError
from .linalg import SeededRng
from .mirror import make_euclidean_mirror, make_exp_mirror, rmd_step
from .scgd import block_direction, sample_partition, scgd_step
from .stiefel import cgd_update, cgd_update_smw, riemannian_gradient_lowrank, skew_factor

log = logging.getLogger(__name__)

GRAD_TOL = "GradTol"
X_TOL = "XTol"
F_TOL = "FTol"
MAX_ITERS = "MaxIters"
LINE_SEARCH_FAIL = "LineSearchFail"

METHODS = ("cgd", "cgd-smw", "scgd", "rmd-exp", "rmd-euclid")


# ------------------------------------------------------------ step policies

@dataclass(frozen=True)
class Constant:
    eta: float


@dataclass(frozen=True)
class InverseSqrtT:
    """Constant step ``c / sqrt(T)`` for a run of ``T`` iterations."""

    c: float


@dataclass(frozen=True)
class InversePow23:
    """Constant step ``c / T^(2/3)`` for a run of ``T`` iterations."""

    c: float


@dataclass(frozen=True)
class LineSearchParams:
    """Non-monotone (Zhang-Hager) backtracking parameters.

    With ``warm_start`` each search begins at ``min(eta_init, eta_prev / backtrack)``
    instead of ``eta_init``, which saves most backtracks once the accepted
    step has settled.
    """

    gamma: float = 0.85
    delta: float = 1e-4
    backtrack: float = 0.5
    eta_init: float = 1e-1
    max_backtracks: int = 30
    warm_start: bool = True

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ConfigError("gamma must lie in [0, 1)")
        if not 0 < self.backtrack < 1:
            raise ConfigError("backtrack must lie in (0, 1)")
        if self.delta <= 0 or self.eta_init <= 0 or self.max_backtracks < 0:
            raise ConfigError("delta, eta_init must be positive and max_backtracks >= 0")


StepPolicy = Union[Constant, InverseSqrtT, InversePow23, LineSearchParams]


def step_schedule(policy, t, T):
    """Step size for iteration ``t`` of a ``T``-iteration run."""
    if isinstance(policy, Constant):
        return policy.eta
    if isinstance(policy, InverseSqrtT):
        return policy.c / math.sqrt(T)
    if isinstance(policy, InversePow23):
        return policy.c / T ** (2.0 / 3.0)
    if isinstance(policy, LineSearchParams):
        return policy.eta_init
    raise ConfigError(f"unknown step policy {policy!r}")


def nonmonotone_accept(f_candidate, C, eta, slope, params):
    """Accept iff ``f_candidate <= C - delta * eta * slope``.

    ``slope`` is the decrease rate ``-d/d eta f(x(eta))`` at 0, equal to the
    squared gradient norm for a gradient step.
    """
    return f_candidate <= C - params.delta * eta * slope


def nonmonotone_update(C, Q, f_next, params):
    """Reference-value recursion; returns ``(C_next, Q_next)``."""
    Q_next = params.gamma * Q + 1.0
    C_next = (params.gamma * Q * C + f_next) / Q_next
    return C_next, Q_next


# ------------------------------------------------------- theory constants

@dataclass(frozen=True)
class TheoryConstants:
    """User-estimated constants entering the step-size bounds (diagnostic only)."""

    L_phi: float
    G: float
    L_f: float
    r: float = math.inf
    sigma2: float = 0.0

    def __post_init__(self):
        if min(self.L_phi, self.G, self.L_f, self.r, self.sigma2) < 0:
            raise ConfigError("theory constants must be nonnegative")


def theoretical_step_bound(tc, stochastic=False):
    """Largest constant step allowed by the deterministic or stochastic convergence bound."""
    if tc.G <= 0:
        raise ConfigError("G must be positive")
    if stochastic:
        denom = tc.L_phi * tc.G + 2 * tc.L_f + 2 * tc.L_f * tc.L_phi**2
    else:
        denom = tc.L_phi * tc.G / 2 + tc.L_f + tc.L_f * tc.L_phi**2
    first = math.inf if denom == 0 else 1.0 / denom
    return min(first, 2.0 / tc.G, tc.r / tc.G)


# ------------------------------------------------------------------ config

@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 1000
    tol_grad: float = 1e-5
    tol_x: float = 1e-5
    tol_f: float = 1e-8
    step_policy: StepPolicy = field(default_factory=lambda: Constant(1e-3))
    seed: int = 0
    method: str = "cgd"
    blocks: int = 1
    scale_unbiased: bool = False
    fixed_budget: bool = False
    theory: Optional[TheoryConstants] = None

    def __post_init__(self):
        if self.max_iters < 0:
            raise ConfigError("max_iters must be nonnegative")
        if min(self.tol_grad, self.tol_x, self.tol_f) <= 0:
            raise ConfigError("tolerances must be positive")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.blocks < 1:
            raise ConfigError("blocks must be >= 1")
        step_schedule(self.step_policy, 0, max(self.max_iters, 1))


# ------------------------------------------------------------------- trace

TRACE_FIELDS = ("iter", "f", "grad_norm", "feasibility", "step", "backtracks", "wall_ms")


@dataclass(frozen=True)
class IterRecord:
    iter: int
    f: float
    grad_norm: float
    feasibility: float
    step: float
    backtracks: int
    wall_ms: float


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    stop_reason: Optional[str] = None

    def append(self, rec):
        if self.records and rec.iter <= self.records[-1].iter:
            raise ValueError("iteration indices must increase")
        self.records.append(rec)

    def stop(self, reason):
        if self.stop_reason is not None:
            raise RuntimeError("stop reason already set")
        self.stop_reason = reason

    @property
    def iterations(self):
        return self.records[-1].iter if self.records else 0

    def rows(self):
        return [asdict(r) for r in self.records]

    def __len__(self):
        return len(self.records)


def check_stop(grad_norm, dx=None, df=None, config=None):
    """First satisfied stopping rule, in the order gradient, step, objective.

    ``dx`` and ``df`` are ``None`` before the first step.
    """
    config = config or SolveConfig()
    if grad_norm <= config.tol_grad:
        return GRAD_TOL
    if dx is not None and dx <= config.tol_x:
        return X_TOL
    if df is not None and df <= config.tol_f:
        return F_TOL
    return None


# ---------------------------------------------------------------- methods

class _Search:
    """One iteration's update curve ``eta -> x(eta)`` and its initial decrease rate."""

    def __init__(self, trial, slope):
        self.trial = trial
        self.slope = slope


def _stiefel_grad_norm(X, G):
    return float(np.linalg.norm(riemannian_gradient_lowrank(X, G)))


def _make_method(problem, config, rng):
    method = config.method
    stiefel = getattr(problem, "manifold", "stiefel") == "stiefel"
    if method == "rmd-euclid":
        if stiefel:
            raise ConfigError("rmd-euclid needs an unconstrained (euclidean) problem")
        from .manifolds import SquaredNorm

        mirror = make_euclidean_mirror(SquaredNorm)

        def search(X, G):
            return _Search(lambda eta: rmd_step(X, G, eta, mirror), float(np.sum(G * G)))

        return search, lambda X, G: float(np.linalg.norm(G)), lambda X: 0.0

    if not stiefel:
        raise ConfigError(f"{method} needs a Stiefel problem")

    if method == "rmd-exp":
        if problem.shape[1] != 1:
            raise ConfigError("rmd-exp runs on the sphere St(n, 1); use p = 1")

        def search(X, G):
            x = X[:, 0]
            g = mf.sphere_project_tangent(x, G[:, 0])
            mirror = make_exp_mirror(x)
            return _Search(lambda eta: rmd_step(x, g, eta, mirror)[:, None], float(g @ g))

    elif method == "cgd":
        def search(X, G):
            W = skew_factor(X, G)
            return _Search(lambda eta: cgd_update(X, W, eta), float(np.sum(G * (W @ X))))

    elif method == "cgd-smw":
        def search(X, G):
            D = riemannian_gradient_lowrank(X, G)
            return _Search(lambda eta: cgd_update_smw(X, G, eta), float(np.sum(G * D)))

    elif method == "scgd":
        n = problem.shape[0]
        if config.blocks > n:
            raise ConfigError(f"blocks={config.blocks} exceeds n={n}")
        part_rng = rng.child("partitions")

        def search(X, G):
            part = sample_partition(n, config.blocks, part_rng)
            D = block_direction(X, G, part, config.scale_unbiased)
            return _Search(
                lambda eta: scgd_step(X, G, eta, part, config.scale_unbiased),
                float(np.sum(G * D)),
            )
    else:  # pragma: no cover - guarded by SolveConfig
        raise ConfigError(method)

    return search, _stiefel_grad_norm, mf.stiefel_residual


def run_solver(problem, config, x0=None):
    """Run ``config.method`` on ``problem``; returns ``(x_final, trace)``.

    Step failures are re-raised as :class:`SolverError` carrying the
    iteration index.
    """
    rng = SeededRng(config.seed)
    search, grad_norm_of, feasibility_of = _make_method(problem, config, rng)
    X = problem.initial_point(rng.child("x0")) if x0 is None else np.array(x0, dtype=np.float64)
    T = config.max_iters
    policy = config.step_policy
    line_search = isinstance(policy, LineSearchParams)

    if config.theory is not None and not line_search:
        bound = theoretical_step_bound(config.theory, stochastic=config.method == "scgd")
        eta0 = step_schedule(policy, 0, max(T, 1))
        log.info("step %.3g vs theoretical bound %.3g%s", eta0, bound,
                 "" if eta0 < bound else " (exceeds bound)")

    trace = IterationTrace()
    t0 = time.perf_counter()
    f, G = problem.value_grad(X)
    gnorm = grad_norm_of(X, G)
    trace.append(IterRecord(0, f, gnorm, feasibility_of(X), 0.0, 0, 1e3 * (time.perf_counter() - t0)))
    if not config.fixed_budget and check_stop(gnorm, config=config):
        trace.stop(GRAD_TOL)
        return X, trace

    C, Q = f, 1.0
    eta_prev = None
    for t in range(T):
        t_start = time.perf_counter()
        backtracks = 0
        try:
            s = search(X, G)
            eta = step_schedule(policy, t, T)
            if line_search:
                if policy.warm_start and eta_prev is not None:
                    eta = min(eta, eta_prev / policy.backtrack)
                while True:
                    try:
                        X_new = s.trial(eta)
                        f_new = problem.value(X_new)
                        ok = np.isfinite(f_new) and nonmonotone_accept(f_new, C, eta, s.slope, policy)
                    except (OutOfChart, SingularMatrix):
                        ok = False
                    if ok:
                        break
                    if backtracks >= policy.max_backtracks:
                        X_new = None
                        break
                    eta *= policy.backtrack
                    backtracks += 1
                if X_new is None:
                    trace.stop(LINE_SEARCH_FAIL)
                    return X, trace
            else:
                X_new = s.trial(eta)
            f_new, G_new = problem.value_grad(X_new)
            if not np.isfinite(f_new):
                raise FloatingPointError("objective became non-finite")
        except (OutOfChart, SingularMatrix, FloatingPointError, ValueError) as exc:
            raise SolverError(t + 1, exc) from exc

        dx = float(np.linalg.norm(X_new - X))
        df = abs(f_new - f)
        if line_search:
            C, Q = nonmonotone_update(C, Q, f_new, policy)
            eta_prev = eta
        X, f, G = X_new, f_new, G_new
        gnorm = grad_norm_of(X, G)
        trace.append(IterRecord(t + 1, f, gnorm, feasibility_of(X), eta, backtracks,
                                1e3 * (time.perf_counter() - t_start)))
        if not config.fixed_budget:
            reason = check_stop(gnorm, dx, df, config)
            if reason:
                trace.stop(reason)
                return X, trace

    trace.stop(MAX_ITERS)
    return X, trace
