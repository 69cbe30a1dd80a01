import numpy as np
import pytest
from hypothesis import strategies as st

from skelrnn.skeleton import PART_NAMES, SkeletonGraph, SkeletonSequence


def path_graph(n: int, root: int | None = None) -> SkeletonGraph:
    """Path 0-1-...-(n-1), everything in the trunk."""
    names = [f"j{i}" for i in range(n)]
    edges = [(i, i + 1) for i in range(n - 1)]
    root = n // 2 if root is None else root
    return SkeletonGraph(tuple(names), tuple(edges), {"trunk": tuple(range(n))}, root, (root,))


@st.composite
def random_trees(draw, min_joints=1, max_joints=30):
    """Random labelled tree (Pruefer-style parent draws) with a random part assignment."""
    n = draw(st.integers(min_joints, max_joints))
    parents = [draw(st.integers(0, k - 1)) for k in range(1, n)]
    edges = [(p, k) for k, p in enumerate(parents, start=1)]
    root = draw(st.integers(0, n - 1))
    labels = [draw(st.sampled_from(PART_NAMES)) for _ in range(n)]
    labels[root] = "trunk"
    parts = {name: tuple(j for j in range(n) if labels[j] == name) for name in PART_NAMES}
    return SkeletonGraph(tuple(f"j{i}" for i in range(n)), tuple(edges), parts, root, (root,))


def random_sequence(rng, T=6, J=4, D=3, valid=None, label=0, subject=0, view=0):
    valid = T if valid is None else valid
    frames = np.zeros((T, J, D))
    frames[:valid] = rng.normal(size=(valid, J, D))
    return SkeletonSequence(frames, valid, label, subject, view)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# repeat the acceptance verdicts in the terminal summary
_verdicts = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        name = report.nodeid.split("::")[-1].removeprefix("test_criterion_")
        _verdicts.append(f"criterion {name}: {'PASS' if report.passed else 'FAIL'}")


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in _verdicts:
            terminalreporter.write_line(line)
