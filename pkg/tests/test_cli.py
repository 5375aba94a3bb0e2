import csv
import json

import pytest
from click.testing import CliRunner

from rmdopt.cli import main

SMALL = ["--problem", "eig", "--n", "20", "--p", "2", "--max-iters", "50", "--repeats", "2"]


@pytest.fixture
def runner():
    return CliRunner()


def _strip_wall(rows):
    return [{k: v for k, v in r.items() if k != "wall_ms"} for r in rows]


def test_bench_csv(runner, tmp_path):
    out = tmp_path / "s.csv"
    res = runner.invoke(main, ["bench", *SMALL, "--out", str(out)])
    assert res.exit_code == 0, res.output
    with open(out) as fh:
        header = fh.readline().strip()
    assert header == "run,seed,iters,final_f,error,stop_reason,wall_ms"
    rows = list(csv.DictReader(open(out)))
    assert [r["seed"] for r in rows] == ["0", "1"]


def test_bench_reproducible(runner, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert runner.invoke(main, ["bench", *SMALL, "--method", "scgd", "--blocks", "2", "--out", str(p)]).exit_code == 0
    a, b = (_strip_wall(list(csv.DictReader(open(p)))) for p in paths)
    assert a == b


def test_trace_csv(runner, tmp_path):
    prefix = tmp_path / "tr"
    res = runner.invoke(main, ["bench", *SMALL, "--trace-prefix", str(prefix), "--step-policy", "linesearch"])
    assert res.exit_code == 0, res.output
    for i in range(2):
        with open(f"{prefix}_run{i}.csv") as fh:
            assert fh.readline().strip() == "iter,f,grad_norm,feasibility,step,backtracks,wall_ms"


def test_bench_json(runner, tmp_path):
    out = tmp_path / "s.json"
    res = runner.invoke(main, ["bench", *SMALL, "--format", "json", "--out", str(out)])
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    assert list(doc["summary"][0]) == ["run", "seed", "iters", "final_f", "error", "stop_reason", "wall_ms"]
    assert list(doc["traces"][0]["records"][0]) == ["iter", "f", "grad_norm", "feasibility", "step", "backtracks", "wall_ms"]
    assert doc["spec"]["config"]["step_policy"] == {"kind": "Constant", "eta": 1e-3}


def test_config_errors_exit_2(runner):
    assert runner.invoke(main, ["bench", "--method", "rmd-euclid", "--n", "5", "--p", "2"]).exit_code == 2
    assert runner.invoke(main, ["bench", "--n", "3", "--p", "5"]).exit_code == 2
    assert runner.invoke(main, ["bench", "--tol-grad", "0"]).exit_code == 2
    assert runner.invoke(main, ["bench", "--method", "scgd", "--blocks", "30", "--n", "10", "--p", "2"]).exit_code == 2
    assert runner.invoke(main, ["diag", "unbiased", "--trials", "10"]).exit_code == 2


def test_solver_error_exit_1(runner):
    res = runner.invoke(main, ["bench", "--problem", "quadratic", "--n", "5", "--p", "1", "--method", "rmd-euclid",
                               "--eta", "1000", "--max-iters", "5000", "--repeats", "1"])
    assert res.exit_code == 1
    assert "run 0" in res.output


def test_rmd_exp_sphere(runner):
    res = runner.invoke(main, ["bench", "--n", "10", "--p", "1", "--method", "rmd-exp", "--repeats", "1",
                               "--step-policy", "linesearch", "--eta", "0.1"])
    assert res.exit_code == 0, res.output


def test_diag_fdcheck(runner):
    res = runner.invoke(main, ["diag", "fdcheck", "--problem", "procrustes", "--n", "15", "--p", "3", "--points", "3"])
    assert res.exit_code == 0
    assert json.loads(res.output)["passed"] is True


def test_diag_unbiased(runner):
    res = runner.invoke(main, ["diag", "unbiased", "--n", "4", "--K", "2", "--exhaustive"])
    doc = json.loads(res.output)
    assert doc["trials"] == 3 and doc["passed"]
    res = runner.invoke(main, ["diag", "unbiased", "--n", "8", "--K", "2", "--trials", "2000"])
    assert json.loads(res.output)["passed"]


def test_diag_ratefit(runner):
    res = runner.invoke(main, ["diag", "ratefit", "--n", "20", "--p", "2", "--eta", "1e-4",
                               "--budgets", "20,40,80,160"])
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    assert len(doc["budgets"]) == 4 and doc["slope"] < 0


def test_diag_retraction(runner, tmp_path):
    out = tmp_path / "r.json"
    res = runner.invoke(main, ["diag", "retraction", "--out", str(out)])
    assert res.exit_code == 0
    assert json.loads(out.read_text())["exponent"] >= 1.9


def test_bench_eig_protocol():
    from rmdopt.bench import ExperimentSpec, mean_summary, run_benchmark
    from rmdopt.solver import Constant, SolveConfig

    spec = ExperimentSpec("eig", 200, 10, SolveConfig(max_iters=5000, step_policy=Constant(1e-3)), repeats=5)
    results = run_benchmark(spec)
    assert mean_summary(results)["mean_error"] <= 1e-4
    again = run_benchmark(spec)
    assert [r.summary() | {"wall_ms": 0} for r in results] == [r.summary() | {"wall_ms": 0} for r in again]
