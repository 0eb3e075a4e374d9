import sys
import numpy as np
import pytest

from bubbletower.params import derive_params
from bubbletower.phase_plane import shoot_heteroclinic

SWEEP = (1e-2, 1e-3, 1e-4, 1e-5)


@pytest.fixture(scope="session")
def heteroclinic6():
    """N = 6 heteroclinics with three bumps along the standard eps sweep."""
    return {eps: shoot_heteroclinic(derive_params(6, eps), 3) for eps in SWEEP}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "VERDICTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.VERDICTS:
        terminalreporter.write_line(line)
