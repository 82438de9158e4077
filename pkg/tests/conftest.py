import numpy as np
import pytest

from katflow.bootstrap import bootstrap
from katflow.complex import build_complex, icosahedron, octahedron, octahedron_points


def regular_octahedron_cfg():
    """Six tangent caps of radius pi/4 centered on the coordinate axes."""
    return np.hstack([np.ones((6, 1)), np.sqrt(2.0) * octahedron_points()])


def stellated_octahedron():
    """Octahedron with face (0, 2, 4) subdivided by a new vertex 6; the
    triangle 0-2-4 becomes a separating, non-facial 3-cycle."""
    faces = [f for f in octahedron().faces if set(f) != {0, 2, 4}]
    faces += [(0, 2, 6), (2, 4, 6), (4, 0, 6)]
    return build_complex(faces)


@pytest.fixture(scope="session")
def octa():
    return octahedron()


@pytest.fixture(scope="session")
def ico():
    return icosahedron()


@pytest.fixture(scope="session")
def octa_cfg(octa):
    return bootstrap(octa)


@pytest.fixture(scope="session")
def ico_cfg(ico):
    return bootstrap(ico)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
