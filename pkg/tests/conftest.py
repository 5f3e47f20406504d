import numpy as np
import pytest
from hypothesis import strategies as st

from poissonmla.instances import random_tree
from poissonmla.tree import Instance, Tree


def chain(weights, rates):
    """Root 0 - 1 - 2 - ... with the given edge weights and vertex rates (rates exclude root)."""
    n = len(weights) + 1
    return Instance(Tree([-1] + list(range(n - 1)), [0.0] + list(weights)), [0.0] + list(rates))


@st.composite
def instances(draw, max_n=8):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(2, max_n))
    return random_tree(np.random.default_rng(seed), n, max_depth=draw(st.integers(1, 4)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
