import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mixedtrails.core import (  # noqa: E402
    BeliefMatrix,
    GroupAssignmentProbabilities,
    Hypothesis,
    StateSpace,
    TransitionDataset,
)


def build(pairs, n, gamma, phis, name="h"):
    """Library objects for an oracle instance given by integer pairs."""
    space = StateSpace([f"s{i}" for i in range(n)])
    d = TransitionDataset(space, [p[0] for p in pairs], [p[1] for p in pairs])
    groups = [f"g{k}" for k in range(len(phis))]
    h = Hypothesis(name, GroupAssignmentProbabilities(groups, gamma),
                   tuple(BeliefMatrix(np.asarray(p), g) for p, g in zip(phis, groups)))
    return d, h


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def soccer():
    from mixedtrails.datasets import load_soccer

    return load_soccer()


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
