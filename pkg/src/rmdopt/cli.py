"""Command line entry point: ``rmdopt bench`` and ``rmdopt diag ...``.

Exit status is 0 on success, 1 when the solver fails, 2 on a bad
configuration.
"""
from __future__ import annotations

import dataclasses
import json
import sys

import click

from . import diagnostics as dg
from .bench import (
    ExperimentSpec,
    default_blocks,
    mean_summary,
    run_benchmark,
    write_json,
    write_summary_csv,
    write_trace_csv,
)
from .errors import ConfigError, RmdError, SolverError
from .linalg import SeededRng
from .problems import generate
from .solver import (
    METHODS,
    Constant,
    InversePow23,
    InverseSqrtT,
    LineSearchParams,
    SolveConfig,
)

POLICIES = ("const", "invsqrt", "invpow23", "linesearch")


def make_policy(name, eta):
    if name == "const":
        return Constant(eta)
    if name == "invsqrt":
        return InverseSqrtT(eta)
    if name == "invpow23":
        return InversePow23(eta)
    return LineSearchParams(eta_init=eta)


def _resolve(method, n, blocks, eta):
    if blocks is None:
        blocks = default_blocks(n) if method == "scgd" else 1
    if eta is None:
        eta = 1e-3 if blocks == 1 else 1e-2
    return blocks, eta


def _fail(exc):
    if isinstance(exc, ConfigError):
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"solver error: {exc}", err=True)
    sys.exit(1)


def _emit(payload, out):
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@click.group()
def main():
    """Riemannian mirror descent / curvilinear gradient benchmarks."""


def solver_options(f):
    options = [
        click.option("--problem", type=click.Choice(["eig", "procrustes", "quadratic"]), default="eig", show_default=True),
        click.option("--n", "n", type=int, default=200, show_default=True),
        click.option("--p", "p", type=int, default=10, show_default=True),
        click.option("--method", type=click.Choice(METHODS), default="cgd", show_default=True),
        click.option("--blocks", type=int, default=None, help="SCGD block count [default: max(1, n // 300)]"),
        click.option("--eta", type=float, default=None,
                     help="step size, schedule constant, or initial line-search step [default: 1e-3 if blocks == 1 else 1e-2]"),
        click.option("--step-policy", type=click.Choice(POLICIES), default="const", show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--scale-unbiased", is_flag=True, help="scale SCGD blocks to an unbiased estimate of W"),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


@main.command()
@solver_options
@click.option("--max-iters", type=int, default=1000, show_default=True)
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--tol-grad", type=float, default=1e-5, show_default=True)
@click.option("--tol-x", type=float, default=1e-5, show_default=True)
@click.option("--tol-f", type=float, default=1e-8, show_default=True)
@click.option("--fixed-budget", is_flag=True, help="disable the stopping rules")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--trace-prefix", default=None, help="write per-run traces to PREFIX_run<i>.csv (csv format only)")
def bench(problem, n, p, method, blocks, eta, step_policy, seed, scale_unbiased, max_iters, repeats,
          tol_grad, tol_x, tol_f, fixed_budget, out, fmt, trace_prefix):
    """Run seeded repeats of one benchmark configuration."""
    try:
        blocks, eta = _resolve(method, n, blocks, eta)
        cfg = SolveConfig(
            max_iters=max_iters, tol_grad=tol_grad, tol_x=tol_x, tol_f=tol_f,
            step_policy=make_policy(step_policy, eta), seed=seed, method=method, blocks=blocks,
            scale_unbiased=scale_unbiased, fixed_budget=fixed_budget,
        )
        spec = ExperimentSpec(problem, n, p, cfg, repeats)
        keep = bool(trace_prefix) or fmt == "json"
        results = run_benchmark(spec, keep_traces=keep)
    except (RmdError, ValueError) as exc:
        _fail(exc if isinstance(exc, (ConfigError, SolverError)) else ConfigError(str(exc)))

    for r in results:
        click.echo(f"run {r.run} seed {r.seed}: iters={r.iters} f={r.final_f:.10g} "
                   f"error={r.error:.3e} stop={r.stop_reason} wall_ms={r.wall_ms:.1f}")
    m = mean_summary(results)
    click.echo(f"mean error {m['mean_error']:.3e}, mean time {m['mean_wall_ms'] / 1e3:.3f} s")
    if out:
        if fmt == "csv":
            write_summary_csv(results, out)
        else:
            write_json(spec, results, out, traces=True)
    if trace_prefix and fmt == "csv":
        for r in results:
            write_trace_csv(r.trace, f"{trace_prefix}_run{r.run}.csv")


@main.group()
def diag():
    """Diagnostics: fdcheck, unbiased, ratefit, retraction."""


@diag.command()
@click.option("--problem", type=click.Choice(["eig", "procrustes"]), default="eig", show_default=True)
@click.option("--n", "n", type=int, default=50, show_default=True)
@click.option("--p", "p", type=int, default=5, show_default=True)
@click.option("--points", type=int, default=10, show_default=True)
@click.option("--h", type=float, default=1e-6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def fdcheck(problem, n, p, points, h, seed, tol, out):
    """Finite-difference check of the Euclidean gradient at random feasible points."""
    rng = SeededRng(seed)
    pr = generate(problem, n, p, rng.child("problem"))
    errs = [dg.fd_gradient_check(pr, pr.initial_point(rng.child(f"x{i}")), h=h, rng=rng.child(f"d{i}"))
            for i in range(points)]
    _emit({"problem": problem, "n": n, "p": p, "max_rel_error": max(errs), "errors": errs,
           "tol": tol, "passed": max(errs) <= tol}, out)


@diag.command()
@click.option("--n", "n", type=int, default=12, show_default=True)
@click.option("--p", "p", type=int, default=3, show_default=True)
@click.option("--K", "K", type=int, default=3, show_default=True)
@click.option("--trials", type=int, default=100000, show_default=True)
@click.option("--exhaustive", is_flag=True, help="average over every equal-size partition")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def unbiased(n, p, K, trials, exhaustive, seed, out):
    """Check that the scaled block estimator averages to the full skew factor."""
    if not exhaustive and trials < 1000:
        _fail(ConfigError("need at least 1000 trials"))
    try:
        rep = dg.unbiasedness_mc(n, p, K, trials, SeededRng(seed), exhaustive=exhaustive)
    except RmdError as exc:
        _fail(ConfigError(str(exc)))
    _emit(dataclasses.asdict(rep), out)


@diag.command()
@solver_options
@click.option("--budgets", default="50,100,200,400,800", show_default=True)
@click.option("--metric", type=click.Choice(["gap", "msg"]), default="gap", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def ratefit(problem, n, p, method, blocks, eta, step_policy, seed, scale_unbiased, budgets, metric, out):
    """Fit the log-log decay slope over fixed iteration budgets."""
    try:
        blocks, eta = _resolve(method, n, blocks, eta)
        cfg = SolveConfig(step_policy=make_policy(step_policy, eta), seed=seed, method=method,
                          blocks=blocks, scale_unbiased=scale_unbiased)
        pr = generate(problem, n, p, SeededRng(seed).child("problem"))
        rep = dg.rate_fit(pr, [int(b) for b in budgets.split(",")], cfg, metric=metric)
    except SolverError as exc:
        _fail(exc)
    except (RmdError, ValueError) as exc:
        _fail(ConfigError(str(exc)))
    _emit(dataclasses.asdict(rep), out)


@diag.command()
@click.option("--samples", type=int, default=20, show_default=True)
@click.option("--dim", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def retraction(samples, dim, seed, out):
    """Quadratic-gap probe of the sphere projection retraction."""
    rep = dg.retraction_regularity_probe(samples, SeededRng(seed), dim=dim)
    _emit(dataclasses.asdict(rep), out)


if __name__ == "__main__":  # pragma: no cover
    main()
