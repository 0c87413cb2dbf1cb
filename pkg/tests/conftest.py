import itertools

import numpy as np
import pytest

from hodgeflow.complex import build_from_edges, clique_complex


def random_clique_complex(rng, n_max=30, density=None, n_min=3):
    n = int(rng.integers(n_min, n_max + 1))
    p = rng.uniform(0.1, 0.9) if density is None else density
    pairs = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return clique_complex(build_from_edges(n, pairs))


def filled_triangle():
    return clique_complex(build_from_edges(3, [(0, 1), (0, 2), (1, 2)]))


def hollow_triangle():
    return build_from_edges(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    reports = []
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            if "test_acceptance" in getattr(rep, "nodeid", "") and rep.when == "call":
                reports.append(rep)
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for rep in sorted(reports, key=lambda r: r.nodeid):
        status = "PASS" if rep.passed else "FAIL"
        terminalreporter.write_line(f"{status}  {rep.nodeid.split('::', 1)[1]}")
