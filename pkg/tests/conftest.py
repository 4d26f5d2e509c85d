import numpy as np
import pytest

from spdckit.dispersion import CrystalSpec
from spdckit.overlap import operating_point
from spdckit.phasematch import PUMP_WAVELENGTH


@pytest.fixture(scope="session")
def pump():
    return PUMP_WAVELENGTH


@pytest.fixture(scope="session")
def spec():
    return CrystalSpec()


@pytest.fixture(scope="session")
def op_spec(spec, pump):
    """Default crystal at the temperature placing the signal at 796 nm."""
    return operating_point(spec, pump, 796.0)


def idler(pump, signal):
    return 1 / (1 / pump - 1 / signal)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(n: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        store[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
