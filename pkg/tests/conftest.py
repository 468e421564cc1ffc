import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from arbodd.instance import ArboInstance, LinkingSets, UncertaintySet  # noqa: E402


def random_linking(rng, n):
    """Split the diagonal pairs (i, i) at random between U1, U2 and U3."""
    pairs = [(i, i) for i in range(n)]
    rng.shuffle(pairs)
    a, b = sorted(rng.integers(0, n + 1, size=2))
    return LinkingSets(pairs[:a], pairs[a:b], pairs[b:])


def random_uncertainty(rng, n, M=None):
    if rng.random() < 0.5:
        M = M or int(rng.integers(1, 5))
        return UncertaintySet.factor_box(rng.uniform(-1, 1, (n, M)), rng.uniform(0.0, 2.0, n))
    xi0 = rng.uniform(0.0, 3.0, n)
    T = np.vstack([-np.eye(n), np.ones(n)])
    d = np.concatenate([-xi0, [xi0.sum() + rng.uniform(0.0, 3.0)]])
    return UncertaintySet.polyhedral(T, d)


def random_instance(rng, n_max=6, rows=1):
    """Small knapsack-recourse instance with mixed linking and either sense."""
    n = int(rng.integers(2, n_max + 1))
    G = rng.integers(1, 8, size=(rows, n))
    h = rng.integers(0, G.sum(axis=1) + 1)
    card = int(rng.integers(0, n + 1))
    return ArboInstance(
        c=rng.normal(size=n),
        x_rows=(np.ones((1, n)), ["<="], [card]),
        y_rows=(G, ["<="] * rows, h),
        linking=random_linking(rng, n),
        xi_set=random_uncertainty(rng, n),
        sense=["min", "max"][int(rng.integers(2))],
    )


def small_instance(c=None, xi0=None, delta=1.0, linking=None):
    """Five-item knapsack recourse with xi >= xi0 and an l1 budget delta."""
    xi0 = np.ones(5) if xi0 is None else np.asarray(xi0, dtype=float)
    T = np.vstack([-np.eye(5), np.ones(5)])
    d = np.concatenate([-xi0, [xi0.sum() + delta]])
    return ArboInstance(
        c=np.zeros(5) if c is None else c,
        x_rows=None,
        y_rows=([[1, 1, 2, 2, 3]], ["<="], [4]),
        linking=linking or LinkingSets(u1=[(i, i) for i in range(5)]),
        xi_set=UncertaintySet.polyhedral(T, d),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
