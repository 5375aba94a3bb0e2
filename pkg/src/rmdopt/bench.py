"""Seeded benchmark runs over the Stiefel test problems and report writers."""
from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import asdict, dataclass, field

from .errors import ConfigError, SolverError
from .linalg import SeededRng
from .problems import generate
from .solver import TRACE_FIELDS, SolveConfig, run_solver

SUMMARY_FIELDS = ("run", "seed", "iters", "final_f", "error", "stop_reason", "wall_ms")


def default_blocks(n):
    """Block count ``floor(n / 300)``, at least 1."""
    return max(1, n // 300)


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str = "eig"
    n: int = 200
    p: int = 10
    config: SolveConfig = field(default_factory=SolveConfig)
    repeats: int = 5

    def __post_init__(self):
        if self.problem not in ("eig", "procrustes", "quadratic"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.n < 1 or not 1 <= self.p <= self.n:
            raise ConfigError("need n >= p >= 1")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")


@dataclass
class RunResult:
    run: int
    seed: int
    iters: int
    final_f: float
    error: float
    stop_reason: str
    wall_ms: float
    trace: object = None

    def summary(self):
        return {k: getattr(self, k) for k in SUMMARY_FIELDS}


def run_benchmark(spec, keep_traces=False):
    """Run ``spec.repeats`` seeded instances; run ``i`` uses seed ``base + i``.

    ``error`` is the absolute objective gap ``|f(x_T) - f_opt|``.
    """
    results = []
    for i in range(spec.repeats):
        seed = spec.config.seed + i
        rng = SeededRng(seed)
        problem = generate(spec.problem, spec.n, spec.p, rng.child("problem"))
        cfg = dataclasses.replace(spec.config, seed=seed)
        t0 = time.perf_counter()
        try:
            _, trace = run_solver(problem, cfg)
        except SolverError as exc:
            exc.run = i
            exc.args = (f"run {i}, {exc.args[0]}",)
            raise
        wall = 1e3 * (time.perf_counter() - t0)
        last = trace.records[-1]
        results.append(RunResult(
            run=i, seed=seed, iters=last.iter, final_f=last.f,
            error=abs(last.f - problem.f_opt), stop_reason=trace.stop_reason,
            wall_ms=wall, trace=trace if keep_traces else None,
        ))
    return results


def asdict_shallow(obj):
    return {f: getattr(obj, f) for f in obj.__dataclass_fields__}


def mean_summary(results):
    k = len(results)
    return {
        "runs": k,
        "mean_error": sum(r.error for r in results) / k,
        "mean_wall_ms": sum(r.wall_ms for r in results) / k,
        "mean_iters": sum(r.iters for r in results) / k,
    }


def write_summary_csv(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in results:
            w.writerow(r.summary())


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in trace.rows():
            w.writerow(row)


def _jsonable(value):
    if isinstance(value, float) and value != value:
        return None
    if hasattr(value, "__dataclass_fields__"):
        d = {"kind": type(value).__name__}
        d.update({k: _jsonable(v) for k, v in asdict(value).items()})
        return d
    return value


def write_json(spec, results, path, traces=False):
    doc = {
        "spec": {
            "problem": spec.problem, "n": spec.n, "p": spec.p, "repeats": spec.repeats,
            "config": {k: _jsonable(v) for k, v in asdict_shallow(spec.config).items()},
        },
        "summary": [r.summary() for r in results],
        "mean": mean_summary(results),
    }
    if traces:
        doc["traces"] = [
            {"run": r.run, "stop_reason": r.trace.stop_reason, "records": r.trace.rows()}
            for r in results
        ]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
