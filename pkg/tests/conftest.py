import sys

import numpy as np
import pytest

from lnlab import problems as prb


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criterion pass/fail lines after the run."""
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "CRITERION_LINES", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def saturating_problem():
    """Built-in ridge-regularized saturating-index problem (d=2, n=32, ridge=3)."""
    model = prb.ModelSpec("saturating_index", 1.0)
    dataset = prb.make_synthetic_dataset(model, 32, 2, np.array([0.5, -0.5]),
                                         0.1, 1.0, 1.0, seed=1)
    return prb.ProblemSpec(model=model, ridge=3.0, dataset=dataset)


@pytest.fixture(scope="session")
def ridge_only_problem():
    """Pure quadratic loss: linear model on all-zero features, ridge = 1."""
    model = prb.ModelSpec("linear")
    dataset = prb.Dataset(xs=np.zeros((4, 1)), ys=np.zeros(4), x_max=1.0, y_max=1.0)
    return prb.ProblemSpec(model=model, ridge=1.0, dataset=dataset)


@pytest.fixture(scope="session")
def one_point_linear():
    """Linear model, single data point (x=1, y=0), no ridge."""
    model = prb.ModelSpec("linear")
    dataset = prb.Dataset(xs=np.ones((1, 1)), ys=np.zeros(1), x_max=1.0, y_max=1.0)
    return prb.ProblemSpec(model=model, ridge=0.0, dataset=dataset)
