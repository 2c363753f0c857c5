import numpy as np
import pytest

from qes.generators import GeneratingSet
from qes.model import TieFunction, build_model

ACCEPTANCE_LINES = []


def ex1_model(beta=0.0, L=7.0, epsilon=2.0, **kw):
    gs = GeneratingSet.from_sources("sum", ["x^2/2", "-y^2/2"], "auto", epsilon)
    tie = TieFunction.parse(f"{beta!r}*(x*y)^2", gs.variables) if beta else None
    return build_model(gs, tie, [L, L], **kw)


def ex2_model(alpha=0.0, L=5.0, epsilon=3.0, **kw):
    gs = GeneratingSet.from_sources("product", ["x", "y", "z"], "auto", epsilon)
    tie = TieFunction.parse(f"{alpha!r}*(2*x^2-y^2-z^2)^2", gs.variables) if alpha else None
    return build_model(gs, tie, [L, L, L], **kw)


def singular_model(L=8.0):
    gs = GeneratingSet.from_sources("sum", ["x^2/2", "-y^2/2"], "auto", 2.0)
    return build_model(gs, TieFunction.parse("-ln(x*y)", gs.variables), [L, L], allow_singular_tie=True)


def random_points(n, count, L, seed=0):
    rng = np.random.default_rng(seed)
    return [c for c in rng.uniform(-L, L, size=(n, count))]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
