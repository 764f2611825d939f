import numpy as np
import pytest
from hypothesis import strategies as st

from graphsim.graph import Graph


def random_graph(rng, n, labels=("A", "B", "C"), p=0.35, gid="g"):
    lab = [labels[i] for i in rng.integers(0, len(labels), size=n)]
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph.build(gid, lab, edges)


def random_pairs(count, max_nodes, seed, labels=("A", "B", "C"), min_nodes=1):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n1, n2 = rng.integers(min_nodes, max_nodes + 1, size=2)
        out.append((random_graph(rng, n1, labels, gid=f"a{i}"), random_graph(rng, n2, labels, gid=f"b{i}")))
    return out


@st.composite
def graphs(draw, max_nodes=6, labels=("A", "B", "C"), gid="g"):
    n = draw(st.integers(1, max_nodes))
    lab = draw(st.lists(st.sampled_from(labels), min_size=n, max_size=n))
    possible = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.booleans(), min_size=len(possible), max_size=len(possible)))
    return Graph.build(gid, lab, [e for e, keep in zip(possible, chosen) if keep])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
