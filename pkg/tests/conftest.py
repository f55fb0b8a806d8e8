import numpy as np
import pytest

from epac_kit import effpot, spectral
from epac_kit.model import asymmetric_anharmonic, harmonic

TABLE_BETAS = (0.1, 1.0, 10.0, 100.0)


@pytest.fixture(scope="session")
def anh():
    return asymmetric_anharmonic()


@pytest.fixture(scope="session")
def harm():
    return harmonic(1.0)


@pytest.fixture(scope="session")
def harm_spectrum():
    cache = {}

    def get(beta):
        if beta not in cache:
            cache[beta] = spectral.solve_auto(harmonic(1.0), beta)
        return cache[beta]

    return get


@pytest.fixture(scope="session")
def anh_spectrum():
    cache = {}

    def get(beta):
        if beta not in cache:
            cache[beta] = spectral.solve_auto(asymmetric_anharmonic(), beta)
        return cache[beta]

    return get


@pytest.fixture(scope="session")
def direct_expansions():
    """Curve-free expansions for the benchmark potential, keyed by beta."""
    p = asymmetric_anharmonic()
    return {b: effpot.expansion_direct(p, b) for b in TABLE_BETAS}


@pytest.fixture(scope="session")
def fitted_pipeline():
    """Full source-grid / Legendre / fit pipeline per beta: (GeneratingData, curve, expansion)."""
    p = asymmetric_anharmonic()
    out = {}
    for b in TABLE_BETAS:
        gd, curve = effpot.effective_potential(p, b)
        out[b] = (gd, curve, effpot.extract_expansion(curve, b))
    return out


@pytest.fixture
def times():
    return np.linspace(0.0, 15.0, 1001)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one summary line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
