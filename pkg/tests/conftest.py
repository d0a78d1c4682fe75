import pytest

from dwtunnel import DoubleOscillator, Lattice, Quartic, analyze_wells, solve_spectrum
from dwtunnel.doubleosc import node_aligned_window


@pytest.fixture(scope="session")
def quartic0():
    p = Quartic(0.0)
    return p, analyze_wells(p), solve_spectrum(p, 4)


@pytest.fixture(scope="session")
def quartic_a0():
    p = Quartic(0.985)
    return p, analyze_wells(p), solve_spectrum(p, 4)


@pytest.fixture(scope="session")
def lattice_flat():
    p = Lattice(10.0, 0.5, 0.0)
    return p, analyze_wells(p), solve_spectrum(p, 4)


@pytest.fixture(scope="session")
def double_osc():
    p = DoubleOscillator(0.3, 3.0)
    return p, analyze_wells(p), solve_spectrum(p, 4, window=node_aligned_window(p))


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Call with (k, passed, detail); prints and records one PASS/FAIL line."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(k, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {k}: {detail}"
        print(line)
        lines.append((k, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
