import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epac_kit.errors import ConfigError
from epac_kit.model import PolynomialPotential, ThermoState, asymmetric_anharmonic, evaluate_potential, harmonic

finite = st.floats(-50, 50, allow_nan=False)


def test_harmonic_value():
    assert evaluate_potential(harmonic(1.0), 2.0) == 2.0


def test_benchmark_values():
    p = asymmetric_anharmonic()
    assert evaluate_potential(p, 0.0) == 0.0
    assert evaluate_potential(p, 1.0) == pytest.approx(0.61, abs=1e-15)


def test_array_input_and_call():
    p = asymmetric_anharmonic()
    q = np.array([-2.0, 0.5, 3.0])
    expected = 0.5 * q**2 + 0.1 * q**3 + 0.01 * q**4
    np.testing.assert_allclose(p(q), expected, rtol=1e-15)


@given(q=finite)
def test_horner_matches_power_sum(q):
    c = (0.3, -1.2, 0.5, 0.1, 0.01)
    p = PolynomialPotential(c)
    direct = sum(ck * q**k for k, ck in enumerate(c))
    assert evaluate_potential(p, q) == pytest.approx(direct, rel=1e-12, abs=1e-12)


@given(q=finite)
def test_even_iff_no_odd_terms(q):
    h = harmonic(1.3)
    assert h.is_even and evaluate_potential(h, q) == evaluate_potential(h, -q)
    assert not asymmetric_anharmonic().is_even


def test_confining_at_large_q():
    p = asymmetric_anharmonic()
    assert p(1e3) > p(1e2) > 0
    assert p(-1e3) > p(-1e2) > 0


@pytest.mark.parametrize(
    "coeffs",
    [(0.0, 1.0), (0.0, 0.0, -0.5), (0.0, 0.0, 0.5, 0.1), (0.0, 0.0, 0.5, 0.0, -0.01), (0.0, float("nan"), 1.0)],
)
def test_rejects_non_confining(coeffs):
    with pytest.raises(ConfigError):
        PolynomialPotential(coeffs)


def test_trailing_zeros_stripped_and_bad_mass():
    assert PolynomialPotential((0.0, 0.0, 0.5, 0.0, 0.0)).degree == 2
    with pytest.raises(ConfigError):
        PolynomialPotential((0.0, 0.0, 0.5), mass=0.0)


def test_tilt_and_derivative():
    p = asymmetric_anharmonic()
    t = p.tilted(0.7)
    assert t(2.0) == pytest.approx(p(2.0) - 1.4)
    assert p.derivative(0.0) == 0.0
    assert p.derivative(0.0, 2) == pytest.approx(1.0)
    assert p.derivative(1.0, 4) == pytest.approx(0.24)


def test_dict_roundtrip_and_digest():
    p = asymmetric_anharmonic()
    q = PolynomialPotential.from_dict({"coeffs": [0, 0, 0.5, 0.1, 0.01], "mass": 1.0, "hbar": 1.0})
    assert q == p and q.digest() == p.digest()
    assert harmonic(2.0).digest() != p.digest()
    with pytest.raises(ConfigError):
        PolynomialPotential.from_dict({"mass": 1.0})


@pytest.mark.parametrize("beta", [0.0, -1.0, math.inf, math.nan])
def test_thermo_state_rejects(beta):
    with pytest.raises(ConfigError):
        ThermoState(beta)
    assert ThermoState(2.0).beta == 2.0
