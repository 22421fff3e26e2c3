import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from plateparadox.mesh import build_disk_mesh

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def disk(level):
    return build_disk_mesh(level)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_interior_points(mesh, n, rng):
    """Points inside random triangles via random barycentric coordinates."""
    t = rng.integers(0, mesh.nt, n)
    lam = rng.dirichlet(np.ones(3), n)
    return np.einsum("pk,pkd->pd", lam, mesh.corners[t]), t


ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store one acceptance verdict and echo it immediately."""
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
