"""Standard effective potential from the constant-source generating function.

For a constant source ``J`` the tilted Hamiltonian ``H - J q`` gives

    w(J) = (1/beta) log Tr exp(-beta (H - J q)),   Q(J) = dw/dJ = <q>_J,

and the effective potential is the Legendre transform
``V_beta(Q) = J Q - w(J)``.  Because ``dV_beta/dQ = J``, the minimum sits at
``Q_min = Q(J=0)`` and the curvature there is ``a2 = 1 / (dQ/dJ)|_{J=0}``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .errors import ConfigError, ConvexityError, FitError, MonotonicityError
from .model import PolynomialPotential

log = logging.getLogger(__name__)

# Reported reference values for V(q) = q^2/2 + q^3/10 + q^4/100:
# beta -> (Q_min, omega_beta, a3, a4)
TABLE1 = {
    0.1: (-1.3735019, 1.07083695, 0.10132291, 0.1018375),
    1.0: (-0.3375973, 0.91069063, 0.41549732, 0.3305302),
    10.0: (-0.1501482, 0.96628105, 0.54407872, 0.2606658),
    100.0: (-0.1501276, 0.96631313, 0.54396628, 0.2608735),
}
TABLE1_COLUMNS = ("Q_min", "omega_beta", "a3", "a4")


@dataclass(frozen=True)
class GeneratingData:
    """Sampled map ``J -> (w(J), Q(J))`` on an ascending source grid.

    ``susceptibility`` holds ``dQ/dJ`` when the backend provides it exactly.
    """

    sources: np.ndarray
    w_values: np.ndarray
    q_values: np.ndarray
    beta: float
    susceptibility: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        j = np.asarray(self.sources, dtype=float)
        if j.size < 1 or np.any(np.diff(j) <= 0):
            raise ConfigError("sources must be strictly ascending")
        dq = np.diff(np.asarray(self.q_values, dtype=float))
        if np.any(dq <= 0):
            k = int(np.argmin(dq))
            raise MonotonicityError(f"Q(J) not increasing between J={j[k]:.6g} and J={j[k + 1]:.6g}")


@dataclass(frozen=True)
class EffectivePotentialCurve:
    """``V_beta`` sampled on the (nonuniform) grid ``Q(J)``; ``sources`` are the slopes."""

    q_grid: np.ndarray
    v_values: np.ndarray
    beta: float
    sources: np.ndarray | None = None

    def normalized(self, v_min: float | None = None) -> np.ndarray:
        """Values shifted so that the minimum is zero (or by ``v_min`` when given)."""
        return self.v_values - (self.v_values.min() if v_min is None else v_min)


@dataclass(frozen=True)
class EffectiveExpansion:
    """Taylor data of ``V_beta`` at its minimum; everything the EPAC formulas need."""

    q_min: float
    a2: float
    a3: float
    a4: float
    beta: float
    mass: float = 1.0
    hbar: float = 1.0
    v_min: float = 0.0
    method: str = "fit"

    def __post_init__(self):
        if not self.a2 > 0:
            raise FitError(f"effective curvature a2={self.a2} is not positive")

    @property
    def omega_beta(self) -> float:
        return math.sqrt(self.a2 / self.mass)

    @property
    def alpha(self) -> float:
        return self.beta * self.hbar * self.omega_beta / 2.0

    def truncated(self) -> "EffectiveExpansion":
        """Same minimum and curvature with ``a3 = a4 = 0``."""
        return EffectiveExpansion(self.q_min, self.a2, 0.0, 0.0, self.beta, self.mass, self.hbar, self.v_min, self.method)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "Q_min": self.q_min,
            "omega_beta": self.omega_beta,
            "a3": self.a3,
            "a4": self.a4,
            "a2": self.a2,
            "method": self.method,
        }

    @classmethod
    def harmonic(cls, omega: float, beta: float, mass: float = 1.0, hbar: float = 1.0) -> "EffectiveExpansion":
        return cls(0.0, mass * omega**2, 0.0, 0.0, beta, mass, hbar, method="harmonic")

    @classmethod
    def from_table(cls, beta: float) -> "EffectiveExpansion":
        """Expansion built from the reported table row (natural units)."""
        q, w, a3, a4 = TABLE1[float(beta)]
        return cls(q, w * w, a3, a4, float(beta), method="table")


# ---------------------------------------------------------------------------
# generating function


def tilted_thermodynamics(
    s: spectral.Spectrum, beta: float, trunc_tol: float = spectral.TRUNCATION_TOL
) -> tuple[float, float, float]:
    """``(w, Q, dQ/dJ)`` for a spectrum of the tilted Hamiltonian."""
    spectral.check_truncation(s, beta, trunc_tol)
    lev = s.levels()
    z = np.exp(-beta * lev).sum()
    x = spectral.matrix_elements(s, 1)
    p = np.exp(-beta * lev) / z
    q = float(p @ np.diag(x))
    kubo = -spectral.dd1_exp(lev[:, None], lev[None, :], beta) / z
    chi = float(np.sum(x**2 * kubo) - beta * q * q)
    w = -s.energies[0] + math.log(z) / beta
    return w, q, chi


def generating_data_spectral(
    p: PolynomialPotential,
    beta: float,
    sources,
    grid: spectral.GridSpec | None = None,
    n_states: int | None = None,
    trunc_tol: float = spectral.TRUNCATION_TOL,
    leak_tol: float = spectral.LEAK_TOL,
) -> GeneratingData:
    """Exact ``w(J)``, ``Q(J)`` and ``dQ/dJ`` from eigensolves of ``H - J q``.

    A single grid (automatic unless given) serves all sources.
    """
    sources = np.asarray(sources, dtype=float)
    if grid is None or n_states is None:
        g_auto, n_auto = spectral.auto_grid(p, beta, sources, trunc_tol=trunc_tol)
        grid = grid or g_auto
        n_states = n_states or n_auto
    rows = []
    for J in sources:
        s = spectral.solve_eigen(p.tilted(J), grid, n_states, leak_tol=leak_tol)
        rows.append(tilted_thermodynamics(s, beta, trunc_tol))
    w, q, chi = (np.array(c) for c in zip(*rows))
    meta = {"backend": "spectral", "grid": grid.to_dict(), "n_states": int(n_states), "potential": p.digest()}
    return GeneratingData(sources, w, q, beta, chi, meta)


def source_grid(
    p: PolynomialPotential,
    beta: float,
    q_window=(-4.0, 2.0),
    n_sources: int = 201,
    **solver,
) -> np.ndarray:
    """Symmetric uniform grid ``[-J_max, J_max]`` whose image ``Q(J)`` covers ``q_window``.

    ``n_sources`` is forced odd so that ``J = 0`` (the minimum) is a node.
    """
    n_sources += 1 - n_sources % 2
    jmax = 1.05 * float(np.max(np.abs(p.derivative(np.asarray(q_window)))))
    for _ in range(20):
        gd = generating_data_spectral(p, beta, [-jmax, jmax], **solver)
        if gd.q_values[0] <= q_window[0] and gd.q_values[-1] >= q_window[1]:
            return np.linspace(-jmax, jmax, n_sources)
        jmax *= 1.3
    raise ConfigError(f"could not find sources covering Q window {q_window}")


# ---------------------------------------------------------------------------
# Legendre transform


def convex_conjugate(x, y, slopes):
    """Pointwise Legendre transform ``slopes * x - y`` of a sampled convex function."""
    return np.asarray(slopes) * np.asarray(x) - np.asarray(y)


def second_divided_differences(x, y) -> np.ndarray:
    x, y = np.asarray(x, float), np.asarray(y, float)
    d1 = np.diff(y) / np.diff(x)
    return 2.0 * np.diff(d1) / (x[2:] - x[:-2])


def legendre_transform(gd: GeneratingData, convexity_tol: float = 1e-9) -> EffectivePotentialCurve:
    """``V_beta(Q(J)) = J Q(J) - w(J)`` on the induced grid; checks convexity."""
    v = convex_conjugate(gd.q_values, gd.w_values, gd.sources)
    if gd.q_values.size >= 3:
        dd = second_divided_differences(gd.q_values, v)
        if dd.min() < -convexity_tol:
            k = int(np.argmin(dd))
            raise ConvexityError(f"V_beta not convex near Q={gd.q_values[k + 1]:.6g} (dd2={dd[k]:.3e})")
    return EffectivePotentialCurve(np.array(gd.q_values), v, gd.beta, np.array(gd.sources))


def inverse_legendre(curve: EffectivePotentialCurve) -> np.ndarray:
    """Recover ``w(J)`` from a curve that carries its slopes."""
    if curve.sources is None:
        raise ConfigError("curve has no slope data")
    return convex_conjugate(curve.q_grid, curve.v_values, curve.sources)


# ---------------------------------------------------------------------------
# expansion coefficients


def _fit_window(q, v, center, window, degree):
    sel = np.abs(q - center) <= window
    x = (q[sel] - center) / window
    if x.size < degree + 3 or (x < 0).sum() < 3 or (x > 0).sum() < 3:
        raise FitError(
            f"only {x.size} points in the fit window |Q - {center:.4g}| <= {window}; refine the source grid"
        )
    vander = np.vander(x, degree + 1, increasing=True)
    coef, _, rank, sv = np.linalg.lstsq(vander, v[sel], rcond=None)
    if rank < degree + 1 or sv[-1] / sv[0] < 1e-10:
        raise FitError("ill-conditioned expansion fit; widen the window or lower the degree")
    return np.polynomial.Polynomial(coef)


def extract_expansion(
    curve: EffectivePotentialCurve,
    beta: float | None = None,
    window: float = 0.5,
    degree: int = 6,
    mass: float = 1.0,
    hbar: float = 1.0,
) -> EffectiveExpansion:
    """Locate the minimum of a sampled ``V_beta`` and read off ``a2..a4``.

    A degree-``degree`` least-squares polynomial is fitted on
    ``|Q - Q_min| <= window``; the window is re-centred once on the fitted
    stationary point.
    """
    beta = curve.beta if beta is None else beta
    q, v = curve.q_grid, curve.v_values
    i0 = int(np.argmin(v))
    if i0 == 0 or i0 == q.size - 1 or q[i0] - window < q[0] or q[i0] + window > q[-1]:
        raise FitError("effective potential minimum lies at the edge of the sampled window")
    center = q[i0]
    for _ in range(2):
        poly = _fit_window(q, v, center, window, degree)
        d1, d2 = poly.deriv(1), poly.deriv(2)
        x = 0.0
        for _ in range(50):
            step = d1(x) / d2(x)
            x -= step
            if abs(step) < 1e-15:
                break
        if abs(x) > 0.5:
            raise FitError("fitted stationary point wanders outside the window")
        center = center + x * window
    a = [poly.deriv(k)(x) / window**k for k in range(5)]
    return EffectiveExpansion(center, a[2], a[3], a[4], beta, mass, hbar, v_min=a[0], method="fit")


def fd_weights(offsets, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at 0 on integer ``offsets``."""
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    a = np.vander(offsets, n, increasing=True).T
    b = np.zeros(n)
    b[order] = math.factorial(order)
    return np.linalg.solve(a, b)


def expansion_direct(
    p: PolynomialPotential,
    beta: float,
    step: float | None = None,
    half_width: int = 4,
    **solver,
) -> EffectiveExpansion:
    """Expansion without a curve fit, from the source derivatives at ``J = 0``.

    With ``chi = dQ/dJ`` (exact, from the Kubo sum) sampled on
    ``J = k * step`` for ``|k| <= half_width``::

        Q_min = Q(0),  a2 = 1/chi,  a3 = -chi'/chi^3,
        a4 = -chi''/chi^4 + 3 chi'^2/chi^5

    where primes are central finite differences along the source grid.
    """
    if step is None:
        q0, _ = spectral._critical_minimum(p)
        k0 = max(float(p.derivative(q0, 2)), 1e-6)
        w0 = math.sqrt(k0 / p.mass)
        length = max(math.sqrt(p.hbar / (p.mass * w0)), math.sqrt(1.0 / (beta * k0)))
        step = 0.05 * k0 * length
    k = np.arange(-half_width, half_width + 1)
    gd = generating_data_spectral(p, beta, k * step, **solver)
    chi = gd.susceptibility
    c0 = chi[half_width]
    c1 = fd_weights(k, 1) @ chi / step
    c2 = fd_weights(k, 2) @ chi / step**2
    a2 = 1.0 / c0
    a3 = -c1 / c0**3
    a4 = -c2 / c0**4 + 3.0 * c1**2 / c0**5
    return EffectiveExpansion(
        float(gd.q_values[half_width]), a2, a3, a4, beta, p.mass, p.hbar,
        v_min=-float(gd.w_values[half_width]), method="direct",
    )


def effective_potential(
    p: PolynomialPotential,
    beta: float,
    q_window=(-4.0, 2.0),
    n_sources: int = 201,
    **solver,
) -> tuple[GeneratingData, EffectivePotentialCurve]:
    """Full pipeline: source grid, generating data, Legendre transform."""
    sources = source_grid(p, beta, q_window, n_sources, **solver)
    gd = generating_data_spectral(p, beta, sources, **solver)
    return gd, legendre_transform(gd)


def relative_deviation(exp: EffectiveExpansion, ref=None) -> dict:
    """Relative deviation of each reported column from ``ref`` (default: the table row)."""
    ref = TABLE1[float(exp.beta)] if ref is None else ref
    got = (exp.q_min, exp.omega_beta, exp.a3, exp.a4)
    return {c: (g - r) / abs(r) for c, g, r in zip(TABLE1_COLUMNS, got, ref)}
