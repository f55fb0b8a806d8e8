import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from epac_kit import analytic, spectral
from epac_kit.errors import BoundaryLeakError, ConfigError, DomainError, TruncationError
from epac_kit.model import asymmetric_anharmonic, harmonic
from epac_kit.spectral import GridSpec


@pytest.fixture(scope="module")
def ladder():
    return spectral.solve_eigen(harmonic(1.0), GridSpec(-10.0, 10.0, 2001), 12)


def test_gridspec_validation():
    g = GridSpec(-1.0, 1.0, 5)
    assert g.spacing == 0.5
    np.testing.assert_allclose(g.points, [-1, -0.5, 0, 0.5, 1])
    for bad in [dict(q_lo=1.0, q_hi=-1.0, n_points=5), dict(q_lo=-1.0, q_hi=1.0, n_points=2),
                dict(q_lo=-1.0, q_hi=1.0, n_points=5, scheme="spline")]:
        with pytest.raises(ConfigError):
            GridSpec(**bad)


def test_harmonic_ladder(ladder):
    np.testing.assert_allclose(ladder.energies[:11], np.arange(11) + 0.5, atol=1e-6)


def test_ground_state_width(ladder):
    assert spectral.matrix_elements(ladder, 2)[0, 0] == pytest.approx(0.5, abs=1e-6)


def test_orthonormality(ladder):
    h = ladder.grid.spacing
    gram = ladder.states.T @ ladder.states * h
    np.testing.assert_allclose(gram, np.eye(ladder.n_states), atol=1e-10)
    assert np.all(np.diff(ladder.energies) > 0)


def test_matrix_elements_ladder_algebra(ladder):
    m1 = spectral.matrix_elements(ladder, 1)
    m2 = spectral.matrix_elements(ladder, 2)
    assert abs(m1[0, 1]) == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert m2[0, 0] == pytest.approx(0.5, abs=1e-6)
    assert abs(m2[0, 2]) == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert abs(m2[0, 1]) < 1e-10
    np.testing.assert_allclose(m2, m2.T, atol=1e-14)
    with pytest.raises(ConfigError):
        spectral.matrix_elements(ladder, 0)


def test_benchmark_ground_state_grid_refinement():
    p = asymmetric_anharmonic()
    e1 = spectral.solve_eigen(p, GridSpec(-12.0, 10.0, 2001), 10).energies
    e2 = spectral.solve_eigen(p, GridSpec(-12.0, 10.0, 4001), 10).energies
    assert abs(e1[0] - e2[0]) < 1e-8
    np.testing.assert_allclose(e1, e2, atol=1e-8)


def test_second_order_scheme_converges_quadratically():
    errs = []
    for n in (1001, 2001):
        s = spectral.solve_eigen(harmonic(1.0), GridSpec(-10.0, 10.0, n, "fd2"), 6)
        errs.append(abs(s.energies[5] - 5.5))
    assert errs[1] < 5e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_boundary_leak_detected():
    with pytest.raises(BoundaryLeakError):
        spectral.solve_eigen(harmonic(1.0), GridSpec(-2.0, 2.0, 81), 10)


def test_state_count_validated():
    with pytest.raises(ConfigError):
        spectral.solve_eigen(harmonic(1.0), GridSpec(-5.0, 5.0, 11), 11)


def test_partition_function(harm_spectrum):
    assert spectral.partition_function(harm_spectrum(1.0), 1.0) == pytest.approx(math.exp(-0.5) / (1 - math.exp(-1)), rel=1e-10)
    assert spectral.partition_function(harm_spectrum(10.0), 10.0) == pytest.approx(math.exp(-5), rel=1e-4)


def test_truncation_error(ladder):
    with pytest.raises(TruncationError):
        spectral.partition_function(ladder, 0.1)


@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
def test_auto_grid_meets_truncation(beta):
    s = spectral.solve_auto(asymmetric_anharmonic(), beta)
    spectral.check_truncation(s, beta)
    assert s.meta["max_edge"] < spectral.LEAK_TOL


def test_exact_corr_ground_state_limit(harm_spectrum):
    v = spectral.exact_corr(harm_spectrum(50.0), 2, 50.0, [0.0]).values[0]
    assert v.real == pytest.approx(0.75, abs=1e-4)


def test_exact_corr_linear_moment(harm_spectrum):
    v = spectral.exact_corr(harm_spectrum(10.0), 1, 10.0, [0.0]).values[0]
    assert v.real == pytest.approx(0.5 / math.tanh(5.0), abs=1e-6)
    assert v.real == pytest.approx(0.5000454, abs=1e-6)


@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
def test_exact_corr_matches_closed_form(harm_spectrum, beta, times):
    got = spectral.exact_corr(harm_spectrum(beta), 2, beta, times).values
    ref = analytic.harmonic_exact_q2(analytic.HarmonicParams(1.0, beta), times).values
    assert np.max(np.abs(got - ref)) < 1e-8


def test_exact_corr_hermiticity(anh_spectrum):
    s = anh_spectrum(1.0)
    t = np.linspace(0.3, 12.0, 50)
    plus = spectral.exact_corr(s, 2, 1.0, t).values
    minus = spectral.exact_corr(s, 2, 1.0, -t[::-1]).values[::-1]
    np.testing.assert_allclose(minus, np.conj(plus), atol=1e-12)


def test_imag_corr_identities(anh_spectrum):
    beta = 1.0
    s = anh_spectrum(beta)
    g = spectral.exact_imag_corr(s, 2, beta, [0.0, 0.4, beta])
    assert g.real[0] == pytest.approx(spectral.exact_corr(s, 2, beta, [0.0]).real[0], rel=1e-12)
    assert abs(g.real[0] - g.real[-1]) < 1e-10
    np.testing.assert_array_equal(g.imag, 0.0)
    with pytest.raises(DomainError):
        spectral.exact_imag_corr(s, 2, beta, [1.5])


def test_imag_corr_harmonic_value(harm_spectrum):
    v = spectral.exact_imag_corr(harm_spectrum(1.0), 1, 1.0, [0.5]).real[0]
    expected = 0.5 * (math.exp(0.5 - 0.5) + math.exp(-0.5 + 0.5)) / (math.exp(0.5) - math.exp(-0.5))
    assert v == pytest.approx(expected, abs=1e-10)
    # at tau = beta/2 the bracket collapses to 1/(2 sinh(1/2))
    assert v == pytest.approx(0.5 / math.sinh(0.5), abs=1e-10)


def test_kubo_linear(harm_spectrum, times):
    s = harm_spectrum(1.0)
    k = spectral.kubo_corr(s, 1.0, times, 1)
    assert k.real[0] == pytest.approx(1.0, abs=1e-6)
    assert np.max(np.abs(k.values - np.cos(times))) < 1e-8


def test_kubo2_closed_form(harm_spectrum, times):
    s = harm_spectrum(1.0)
    assert spectral.kubo2_corr(s, 1.0, [0.0]).real[0] == pytest.approx(2 + 0.5 / math.tanh(0.5), abs=1e-8)
    assert 2 + 0.5 / math.tanh(0.5) == pytest.approx(3.08198, abs=1e-5)
    s10 = harm_spectrum(10.0)
    ref = analytic.cmd_effective_classical_op_q2(analytic.HarmonicParams(1.0, 10.0), times).values
    assert np.max(np.abs(spectral.kubo2_corr(s10, 10.0, times).values - ref)) < 1e-6


def test_kubo2_classical_limit_is_double_average():
    # For commuting numbers the ordered-simplex weight 2/beta^2 * beta^2/2 reduces to the
    # plain thermal average of q^4 at t = 0 when all levels coincide; check the weight directly.
    beta = 1.7
    assert spectral.dd2_exp(0.3, 0.3, 0.3, beta) * 2 / beta**2 == pytest.approx(math.exp(-beta * 0.3))


energies = st.floats(-5.0, 20.0, allow_nan=False)


@settings(max_examples=60)
@given(a=energies, b=energies, beta=st.floats(0.05, 5.0))
def test_dd1_is_mean_value_integral(a, b, beta):
    ref = quad(lambda s: -beta * math.exp(-beta * (a + s * (b - a))), 0.0, 1.0, epsabs=0, epsrel=1e-12)[0]
    assert spectral.dd1_exp(a, b, beta) == pytest.approx(ref, rel=1e-9)
    assert spectral.dd1_exp(a, b, beta) == spectral.dd1_exp(b, a, beta)


@settings(max_examples=40)
@given(a=energies, b=energies, c=energies, beta=st.floats(0.05, 3.0))
def test_dd2_is_simplex_integral(a, b, c, beta):
    def inner(u):
        return quad(lambda v: beta**2 * math.exp(-beta * (a + u * (b - a) + v * (c - b))), 0.0, u, epsrel=1e-12)[0]

    ref = quad(inner, 0.0, 1.0, epsrel=1e-11)[0]
    got = spectral.dd2_exp(a, b, c, beta)
    assert got == pytest.approx(ref, rel=1e-7)
    assert got == pytest.approx(spectral.dd2_exp(c, a, b, beta), rel=1e-12)


def test_divided_difference_degenerate_limits():
    beta, a = 2.0, 0.7
    assert spectral.dd1_exp(a, a, beta) == pytest.approx(-beta * math.exp(-beta * a))
    assert spectral.dd1_exp(a, a + 1e-9, beta) == pytest.approx(spectral.dd1_exp(a, a, beta), rel=1e-8)
    assert spectral.dd2_exp(a, a + 1e-7, a - 1e-7, beta) == pytest.approx(spectral.dd2_exp(a, a, a, beta), rel=1e-6)
