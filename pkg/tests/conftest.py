import numpy as np
import pytest
from hypothesis import settings

from ma_spline.mesh import TriMesh, build_square_mesh

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def square1():
    return build_square_mesh(1)


@pytest.fixture
def square2():
    return build_square_mesh(2)


@pytest.fixture
def two_triangles():
    # a non-symmetric pair sharing the edge (1, 2)
    V = np.array([[0.0, 0.0], [1.0, 0.1], [0.2, 0.9], [1.3, 1.2]])
    return TriMesh.from_arrays(V, [[0, 1, 2], [1, 3, 2]])


@pytest.fixture
def single_triangle():
    return TriMesh.from_arrays(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), [[0, 1, 2]])


ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records the summary line of acceptance criterion ``n``."""

    def record(n, ok, detail=""):
        # a criterion fails if any of its parts fails
        prev = ACCEPTANCE_LINES.get(n)
        ok = ok and (prev is None or prev[0])
        details = ([prev[1]] if prev and prev[1] else []) + ([detail] if detail else [])
        ACCEPTANCE_LINES[n] = (ok, "; ".join(details))
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        ok, detail = ACCEPTANCE_LINES[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
