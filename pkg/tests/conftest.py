import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from simplexec.graph import build_graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by test_acceptance.record, printed after the run
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def random_graph(rng: np.random.Generator, n: int, p: float):
    """Erdos-Renyi digraph without self-loops."""
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    return build_graph(n, [(int(i), int(j)) for i, j in zip(*np.nonzero(mask))])


@pytest.fixture
def triangle():
    return build_graph(3, [(0, 1), (1, 2), (0, 2)])
