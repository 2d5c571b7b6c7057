import numpy as np
import pytest

from lasso_cv_lab.design import Dataset, DesignMatrix, GroundTruth, realize


def random_dataset(seed, n=None, p=None, sigma=1.0):
    """Gaussian design with a sparse-ish truth; sizes drawn from the seed when not given."""
    g = np.random.default_rng(seed)
    n = n or int(g.integers(20, 201))
    p = p or int(g.integers(1, min(20, n - 2) + 1))
    X = g.standard_normal((n, p))
    theta = g.standard_normal(p) * (g.random(p) < 0.6)
    return realize(DesignMatrix.from_rows(X), GroundTruth(theta, sigma), int(g.integers(2**63)))


def dataset_from(X, y):
    design = DesignMatrix.from_rows(np.asarray(X, dtype=float))
    return Dataset(design, np.asarray(y, dtype=float), np.zeros(len(y)))


@pytest.fixture
def worked():
    """X = {(1), (1)}, Y = (2, 4)."""
    return dataset_from([[1.0], [1.0]], [2.0, 4.0])


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one pass/fail line per acceptance criterion; echoed in the terminal summary."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
