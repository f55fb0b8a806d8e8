"""Exact quantum reference: grid eigensolver and eigenbasis correlators.

The Hamiltonian ``H = -hbar^2/(2m) d^2/dq^2 + V(q)`` is discretized on a
uniform grid.  Two kinetic-energy schemes are available:

* ``"sinc"`` (default): Colbert-Miller sinc-DVR, spectrally accurate;
* ``"fd2"``: second-order central differences (tridiagonal), kept as the
  simplest baseline.

All thermal sums are done with energies measured from the ground state so
that Boltzmann factors never overflow.  Imaginary-time integrals (Kubo
transforms) are evaluated in closed form as divided differences of
``exp(-beta x)``, which stay finite for every ordering of the levels.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.integrate import trapezoid

from .errors import BoundaryLeakError, ConfigError, ConvergenceError, DomainError, TruncationError
from .model import PolynomialPotential
from .series import CorrelationSeries

log = logging.getLogger(__name__)

TRUNCATION_TOL = 1e-12
LEAK_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``q_lo .. q_hi`` with ``n_points`` samples (both ends included)."""

    q_lo: float
    q_hi: float
    n_points: int
    scheme: str = "sinc"

    def __post_init__(self):
        if not self.q_lo < self.q_hi:
            raise ConfigError("grid requires q_lo < q_hi")
        if int(self.n_points) < 3:
            raise ConfigError("grid needs at least 3 points")
        if self.scheme not in ("sinc", "fd2"):
            raise ConfigError(f"unknown discretization scheme {self.scheme!r}")
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def spacing(self) -> float:
        return (self.q_hi - self.q_lo) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.q_lo, self.q_hi, self.n_points)

    def to_dict(self) -> dict:
        return {"q_lo": self.q_lo, "q_hi": self.q_hi, "n_points": self.n_points, "scheme": self.scheme}


@dataclass(frozen=True)
class Spectrum:
    """Lowest eigenpairs of a gridded Hamiltonian.

    ``states[:, n]`` is normalized so that ``sum(psi_n**2) * h == 1``.
    """

    energies: np.ndarray
    states: np.ndarray
    grid: GridSpec
    potential: PolynomialPotential
    meta: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return self.energies.size

    @property
    def hbar(self) -> float:
        return self.potential.hbar

    def levels(self) -> np.ndarray:
        """Energies relative to the ground state."""
        return self.energies - self.energies[0]


# ---------------------------------------------------------------------------
# grid construction


def _critical_minimum(p: PolynomialPotential) -> tuple[float, float]:
    """Global minimum (position, value) of a confining polynomial."""
    roots = np.polynomial.Polynomial(p.coeffs).deriv().roots()
    real = roots[np.abs(roots.imag) < 1e-9 * (1 + np.abs(roots))].real
    vals = p(real)
    i = int(np.argmin(vals))
    return float(real[i]), float(vals[i])


def _outer_turning_points(p: PolynomialPotential, energy: float) -> tuple[float, float]:
    c = list(p.coeffs)
    c[0] -= energy
    roots = np.polynomial.Polynomial(c).roots()
    real = roots[np.abs(roots.imag) < 1e-9 * (1 + np.abs(roots))].real
    return float(real.min()), float(real.max())


def _decay_point(p: PolynomialPotential, energy: float, start: float, direction: int, nepers: float) -> float:
    """Walk outward from a turning point until the WKB decay exponent exceeds ``nepers``."""
    m, hbar = p.mass, p.hbar
    step = 0.02 * max(1.0, abs(start))
    acc, q = 0.0, start
    while acc < nepers:
        q_next = q + direction * step
        mid = 0.5 * (q + q_next)
        acc += math.sqrt(max(2 * m * (p(mid) - energy), 0.0)) / hbar * step
        q = q_next
    return q


def auto_grid(
    p: PolynomialPotential,
    beta: float,
    sources=(0.0,),
    trunc_tol: float = TRUNCATION_TOL,
    scheme: str = "sinc",
    min_states: int = 12,
) -> tuple[GridSpec, int]:
    """Choose a grid and state count adequate for ``beta`` and every source in ``sources``.

    The energy cutoff is set so that ``exp(-beta (E_max - E_0)) < trunc_tol``
    with margin, the bounds so that the highest retained state has decayed
    by ~``exp(-40)`` at both walls, and the spacing so that the sinc basis
    resolves twice the largest classical momentum below the cutoff.
    """
    nepers = math.log(1.0 / trunc_tol)
    sources = np.atleast_1d(np.asarray(sources, dtype=float))
    lo, hi, kmax, count = np.inf, -np.inf, 0.0, 0
    for J in (sources.min(), sources.max()):
        u = p.tilted(J)
        q0, u0 = _critical_minimum(u)
        w0 = math.sqrt(max(u.derivative(q0, 2), 1e-12) / u.mass)
        e_cut = u0 + (nepers + 6.0) / beta + (min_states + 2) * u.hbar * w0
        # retained states end near e_cut; walls are placed for a padded energy
        e_top = e_cut + 0.25 * (e_cut - u0)
        a, b = _outer_turning_points(u, e_top)
        lo = min(lo, _decay_point(u, e_top, a, -1, 40.0))
        hi = max(hi, _decay_point(u, e_top, b, +1, 40.0))
        kmax = max(kmax, math.sqrt(2 * u.mass * (e_top - u0)) / u.hbar)
        # WKB level count below the cutoff
        a, b = _outer_turning_points(u, e_cut)
        qq = np.linspace(a, b, 4001)
        mom = np.sqrt(np.clip(2 * u.mass * (e_cut - u(qq)), 0.0, None)) / u.hbar
        count = max(count, int(trapezoid(mom, qq) / math.pi + 0.5) + 2)
    h = math.pi / (1.6 * kmax)
    if scheme == "fd2":
        h /= 8.0
    n_points = int(math.ceil((hi - lo) / h)) + 1
    n_states = min(max(min_states, count), n_points - 1)
    return GridSpec(lo, hi, n_points, scheme), n_states


# ---------------------------------------------------------------------------
# eigensolver


@functools.lru_cache(maxsize=8)
def _sinc_kinetic(n: int, h: float, mass: float, hbar: float) -> np.ndarray:
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    off = np.where(d == 0, 1, d)
    t = np.where(d == 0, np.pi**2 / 3.0, 2.0 * (-1.0) ** np.abs(d) / off**2)
    return t * hbar**2 / (2.0 * mass * h**2)


def _fix_signs(u: np.ndarray) -> np.ndarray:
    # deterministic phase: first appreciable lobe positive
    for n in range(u.shape[1]):
        col = u[:, n]
        k = int(np.argmax(np.abs(col) > 1e-3 * np.abs(col).max()))
        if col[k] < 0:
            u[:, n] = -col
    return u


def solve_eigen(p: PolynomialPotential, g: GridSpec, n_states: int, leak_tol: float = LEAK_TOL) -> Spectrum:
    """Diagonalize the gridded Hamiltonian and keep the lowest ``n_states`` pairs.

    Raises
    ------
    BoundaryLeakError
        If a retained state is not negligible at either grid end.
    ConvergenceError
        If LAPACK fails or the returned levels are not strictly increasing.
    """
    n_states = int(n_states)
    if not 1 <= n_states < g.n_points:
        raise ConfigError("need 1 <= n_states < n_points")
    q, h = g.points, g.spacing
    v = p(q)
    try:
        if g.scheme == "sinc":
            ham = _sinc_kinetic(g.n_points, h, p.mass, p.hbar) + np.diag(v)
            e, u = linalg.eigh(ham, subset_by_index=(0, n_states - 1))
        else:
            k = p.hbar**2 / (2 * p.mass * h**2)
            e, u = linalg.eigh_tridiagonal(
                v + 2 * k, np.full(g.n_points - 1, -k), select="i", select_range=(0, n_states - 1)
            )
    except (linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"eigensolve failed: {exc}") from exc
    if np.any(np.diff(e) <= 0):
        raise ConvergenceError("eigenvalues not strictly increasing")
    u = _fix_signs(u / math.sqrt(h))
    edge = np.maximum(np.abs(u[0]), np.abs(u[-1])) / np.abs(u).max(axis=0)
    worst = int(np.argmax(edge))
    if edge[worst] > leak_tol:
        raise BoundaryLeakError(
            f"state {worst} has relative amplitude {edge[worst]:.2e} at the grid boundary "
            f"(tolerance {leak_tol:.0e}); enlarge [q_lo, q_hi]"
        )
    return Spectrum(e, u, g, p, {"max_edge": float(edge.max())})


def solve_auto(p: PolynomialPotential, beta: float, sources=(0.0,), **kw) -> Spectrum:
    """``solve_eigen`` on the grid returned by :func:`auto_grid`."""
    g, n = auto_grid(p, beta, sources, **kw)
    return solve_eigen(p, g, n)


# ---------------------------------------------------------------------------
# thermal sums


def check_truncation(s: Spectrum, beta: float, tol: float = TRUNCATION_TOL) -> None:
    tail = math.exp(-beta * (s.energies[-1] - s.energies[0]))
    if tail >= tol:
        raise TruncationError(
            f"exp(-beta (E_max - E_0)) = {tail:.2e} >= {tol:.0e} at beta={beta}; request more states"
        )


def log_partition_function(s: Spectrum, beta: float, check: bool = True) -> float:
    if check:
        check_truncation(s, beta)
    lev = s.levels()
    return -beta * s.energies[0] + math.log(np.exp(-beta * lev).sum())


def partition_function(s: Spectrum, beta: float) -> float:
    """``Z = sum_n exp(-beta E_n)``."""
    return math.exp(log_partition_function(s, beta))


def boltzmann_weights(s: Spectrum, beta: float) -> np.ndarray:
    """Normalized populations ``exp(-beta E_n)/Z``."""
    check_truncation(s, beta)
    w = np.exp(-beta * s.levels())
    return w / w.sum()


def matrix_elements(s: Spectrum, power: int) -> np.ndarray:
    """``M[n, m] = <n| q^power |m>`` by quadrature on the grid."""
    if power < 1:
        raise ConfigError("power must be >= 1")
    q = s.grid.points
    m = s.states.T @ (q[:, None] ** power * s.states) * s.grid.spacing
    return 0.5 * (m + m.T)


def thermal_average(s: Spectrum, beta: float, power: int = 1) -> float:
    """``<q^power>`` in the canonical ensemble."""
    return float(boltzmann_weights(s, beta) @ np.diag(matrix_elements(s, power)))


def dd1_exp(a, b, beta: float):
    """First divided difference of ``exp(-beta x)`` at ``a, b``.

    Equals ``(exp(-beta a) - exp(-beta b)) / (a - b)`` with the coincident
    limit ``-beta exp(-beta a)``.  ``-exp(beta a) * dd1_exp(a, b)`` is the
    imaginary-time integral ``int_0^beta exp((a - b) lam) dlam``.
    """
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    d = np.abs(a - b)
    lo = np.minimum(a, b)
    small = d < 1e-10 * max(1.0, float(np.max(np.abs(a), initial=0.0)))
    dsafe = np.where(small, 1.0, d)
    out = np.where(small, -beta, np.expm1(-beta * dsafe) / dsafe)
    return np.exp(-beta * lo) * out


def dd2_exp(a, b, c, beta: float):
    """Second divided difference of ``exp(-beta x)``; symmetric in its arguments.

    By the Hermite-Genocchi formula this is the integral of
    ``exp(-(u0 a + u1 b + u2 c))`` over the simplex ``u >= 0, sum(u) = beta``.
    """
    x = np.sort(np.stack(np.broadcast_arrays(*(np.asarray(v, float) for v in (a, b, c)))), axis=0)
    x0, x1, x2 = x
    span = x2 - x0
    scale = max(1.0, float(np.max(np.abs(x), initial=0.0)))
    same = span < 1e-10 * scale
    num = dd1_exp(x1, x2, beta) - dd1_exp(x0, x1, beta)
    return np.where(same, 0.5 * beta**2 * np.exp(-beta * x0), num / np.where(same, 1.0, span))


def _phase_sum(weights: np.ndarray, levels: np.ndarray, times: np.ndarray, hbar: float, imaginary=False):
    """``sum_jk W_jk exp(i (e_j - e_k) t / hbar)`` for each t (or ``exp(-(e_k - e_j) tau)``)."""
    out = np.empty(times.size, dtype=complex)
    chunk = 256
    for s in range(0, times.size, chunk):
        t = times[s : s + chunk, None] / hbar
        if imaginary:
            a, b = np.exp(levels * t), np.exp(-levels * t)
        else:
            a, b = np.exp(1j * levels * t), np.exp(-1j * levels * t)
        out[s : s + chunk] = np.einsum("tj,tj->t", a @ weights, b)
    return out


def _series_meta(s: Spectrum) -> dict:
    return {"potential": s.potential.digest(), "grid": s.grid.to_dict(), "n_states": s.n_states}


def exact_corr(s: Spectrum, n: int, beta: float, times) -> CorrelationSeries:
    """Exact ``<q^n(t) q^n(0)>_beta`` from the eigenbasis."""
    times = np.asarray(times, dtype=float)
    p = boltzmann_weights(s, beta)
    m2 = matrix_elements(s, n) ** 2
    vals = _phase_sum(p[:, None] * m2, s.levels(), times, s.hbar)
    return CorrelationSeries(times, vals, "exact", beta, n, _series_meta(s))


def exact_imag_corr(s: Spectrum, n: int, beta: float, taus) -> CorrelationSeries:
    """Exact ``<T q^n(tau) q^n(0)>_beta`` for ``0 <= tau <= beta hbar`` (real valued)."""
    taus = np.asarray(taus, dtype=float)
    period = beta * s.hbar
    if taus.size and (taus.min() < -1e-12 * period or taus.max() > period * (1 + 1e-12)):
        raise DomainError(f"tau must lie in [0, {period}]")
    taus = np.clip(taus, 0.0, period)
    check_truncation(s, beta)
    lev = s.levels()
    m2 = matrix_elements(s, n) ** 2
    z = np.exp(-beta * lev).sum()
    out = np.empty(taus.size)
    for i, tau in enumerate(taus):
        a = np.exp(-(period - tau) * lev / s.hbar)
        b = np.exp(-tau * lev / s.hbar)
        out[i] = a @ m2 @ b / z
    return CorrelationSeries(taus, out, "exact-imag", beta, n, _series_meta(s))


def kubo_corr(s: Spectrum, beta: float, times, n: int = 1) -> CorrelationSeries:
    """Canonical (Kubo-transformed) ``(1/beta) int_0^beta dlam <q^n(t - i hbar lam) q^n(0)>``."""
    times = np.asarray(times, dtype=float)
    check_truncation(s, beta)
    lev = s.levels()
    z = np.exp(-beta * lev).sum()
    w = -dd1_exp(lev[:, None], lev[None, :], beta) / (beta * z)
    w *= matrix_elements(s, n) ** 2
    vals = _phase_sum(w, lev, times, s.hbar)
    return CorrelationSeries(times, vals, "kubo", beta, n, _series_meta(s))


def kubo2_corr(s: Spectrum, beta: float, times) -> CorrelationSeries:
    """Second-order Kubo transform of ``<q^2(t) q^2(0)>``.

    ``(2/beta^2) int int dlam deta <q(t - i hbar lam) q(t - i hbar eta) q^2(0)>``
    over the ordered domain ``0 <= eta <= lam <= beta`` (the 2/beta^2
    prefactor normalizes that simplex).  Both imaginary shifts are
    integrated per level triple ``(j, k, l)`` as the second divided
    difference of ``exp(-beta x)``.
    """
    times = np.asarray(times, dtype=float)
    check_truncation(s, beta)
    lev = s.levels()
    z = np.exp(-beta * lev).sum()
    q1 = matrix_elements(s, 1)
    q2 = matrix_elements(s, 2)
    n = lev.size
    w = np.empty((n, n))
    for j in range(n):
        f = dd2_exp(lev[j], lev[:, None], lev[None, :], beta)  # [k, l]
        w[j] = np.einsum("k,kl,kl->l", q1[j], q1, f) * q2[:, j]
    w *= 2.0 / (beta**2 * z)
    vals = _phase_sum(w, lev, times, s.hbar)
    return CorrelationSeries(times, vals, "kubo2", beta, 2, _series_meta(s))
