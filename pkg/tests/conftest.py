import numpy as np
import pytest

from lagra.graph import AttributedGraph, Dataset
from lagra.oracle import toy_corpus

TOY_SEEDS = (1, 2, 3, 4, 5)


def make_graph(labels, edges, attrs=None, y=1, dim=1):
    n = len(labels)
    if attrs is None:
        attrs = np.zeros((n, dim))
    return AttributedGraph(labels, np.asarray(attrs, dtype=float).reshape(n, -1), tuple(edges), y)


@pytest.fixture(scope="session")
def toy_pairs():
    """(train, val) ToyCorpus pairs: 20 training graphs, 10 validation graphs."""
    return {s: (toy_corpus(s, n_graphs=20), toy_corpus(1000 + s, n_graphs=10)) for s in TOY_SEEDS}


@pytest.fixture
def triangle_dataset():
    g = make_graph([0, 0, 0], [(0, 1), (1, 2), (0, 2)], [[0.0], [1.0], [2.0]])
    return Dataset([g], 1)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one PASS/FAIL/SKIP line for an acceptance criterion; returns the verdict.

    ``ok=None`` marks a criterion that could not be run.
    """
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def emit(number, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{status}  [{number:>2}] {detail}"
        lines.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
