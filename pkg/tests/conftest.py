import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wavekin import GaussianComponent, GaussianSuperposition, Massless, auto_grid  # noqa: E402
from wavekin.cli import fig1_field  # noqa: E402

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fig1():
    return fig1_field()


@pytest.fixture(scope="session")
def fig1_spec(fig1):
    return auto_grid(fig1, 6.0, 96)


@pytest.fixture(scope="session")
def massless():
    return Massless(1.0)


@pytest.fixture
def single():
    """Unit Gaussian at k0 = (1, 0, 0), width 0.1."""
    return GaussianSuperposition((GaussianComponent(1.0, (1.0, 0.0, 0.0), 0.1),))


def random_superposition(rng, n_packets=2, kmin=-1.5, kmax=1.5, dmin=0.1, dmax=0.3, offsets=True,
                         complex_amp=True):
    comps = []
    for _ in range(n_packets):
        amp = complex(*rng.normal(size=2)) if complex_amp else float(rng.uniform(0.2, 1.0))
        r0 = rng.uniform(-2, 2, 3) if offsets else (0.0, 0.0, 0.0)
        comps.append(GaussianComponent(amp, rng.uniform(kmin, kmax, 3), rng.uniform(dmin, dmax), r0))
    return GaussianSuperposition(tuple(comps))


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)


@pytest.fixture
def acceptance_report():
    def record(number, title, passed, detail):
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
