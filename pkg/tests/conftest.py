import numpy as np
import pytest

from rmdopt.linalg import SeededRng
from rmdopt.manifolds import random_stiefel


@pytest.fixture
def rng():
    return SeededRng(12345)


def stiefel(n, p, seed=0):
    return random_stiefel(SeededRng(seed), n, p)


def skew(n, seed=0, scale=1.0):
    M = SeededRng(seed).generator.standard_normal((n, n))
    return scale * (M - M.T) / 2


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda l: int(l.split()[0][4:])):
            terminalreporter.write_line(line)
