import pytest

from vatsim.constants import AMU, ANGSTROM, MEV
from vatsim.phonon_bath import LatticeSpec
from vatsim.tunneling import BarrierSpec

ACCEPTANCE_RESULTS: list[str] = []


@pytest.fixture(scope="session")
def default_spec():
    return LatticeSpec(N=70, L=70, m=18 * AMU, a_lat=3 * ANGSTROM, c_S=1500.0, omega_D=1.6e13, temperature=310.0)


@pytest.fixture(scope="session")
def default_barrier():
    return BarrierSpec(M=6 * AMU, V0=70 * MEV, d0=1 * ANGSTROM)


@pytest.fixture(scope="session")
def small_spec():
    return LatticeSpec(N=8, L=6, m=18 * AMU, a_lat=3 * ANGSTROM, c_S=1500.0, omega_D=1.6e13, temperature=310.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
