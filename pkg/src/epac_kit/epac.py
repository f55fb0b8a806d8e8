"""EPAC correlators built from the effective-potential expansion.

Inputs are an :class:`~epac_kit.effpot.EffectiveExpansion` (``Q_min``,
``omega_beta``, ``a3``, ``a4``, ``beta``, ``m``, ``hbar``).  The
imaginary-time Green function of ``q^2`` in the local potential
approximation is a finite sum of ``exp(+-k omega_beta tau)`` terms, and its
continuation ``tau -> i t`` gives the real-time correlator

    <q^2(t) q^2(0)>_EPAC = a4 A(t) + a3^2 B(t) + a3 Q_min C(t) + D(t).

Every coefficient is a Laurent polynomial in ``e^alpha`` with
``alpha = beta hbar omega_beta / 2``.  Coefficients are stored as
``{power: weight}`` maps and evaluated either literally (``form="printed"``)
or after dividing numerator and denominator by ``e^{K alpha}``
(``form="stable"``, never overflows).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import SimpleNamespace

import mpmath
import numpy as np

from .effpot import EffectiveExpansion
from .errors import ConfigError, DomainError
from .series import CorrelationSeries

EpacInputs = EffectiveExpansion

_NP = SimpleNamespace(exp=np.exp, cos=np.cos, sin=np.sin, one=1.0, i=1j)
_MP = SimpleNamespace(exp=mpmath.exp, cos=mpmath.cos, sin=mpmath.sin, one=mpmath.mpf(1), i=mpmath.mpc(0, 1))

PRINTED_ALPHA_LIMIT = 50.0


class _Frame:
    """Evaluation context: ``lp(terms)`` is ``sum c e^{m alpha}`` divided by ``(e^a - e^-a)^K``."""

    def __init__(self, alpha, lib, form):
        if form not in ("stable", "printed"):
            raise ConfigError(f"unknown form {form!r}")
        if form == "printed" and lib is _NP and alpha >= PRINTED_ALPHA_LIMIT:
            raise ConfigError(f"printed form overflows for alpha={alpha:.1f}; use form='stable'")
        self.alpha, self.lib, self.form = alpha, lib, form

    def lp(self, terms: dict, k: int):
        a, exp = self.alpha, self.lib.exp
        if self.form == "printed":
            num = sum(c * exp(m * a) for m, c in terms.items())
            return num / (exp(a) - exp(-a)) ** k
        num = sum(c * exp((m - k) * a) for m, c in terms.items())
        return num / (self.lib.one - exp(-2 * a)) ** k

    def coth(self, x):
        e = self.lib.exp(-2 * x)
        return (1 + e) / (1 - e)


def _scalars(inp: EffectiveExpansion, lib):
    conv = (lambda x: mpmath.mpf(x)) if lib is _MP else float
    return (conv(inp.hbar), conv(inp.mass), conv(inp.omega_beta), conv(inp.alpha), conv(inp.q_min))


# ---------------------------------------------------------------------------
# real time


def _components(inp: EffectiveExpansion, t, lib=_NP, form="stable"):
    """``A, B, C, D`` at (possibly complex) times ``t``."""
    hbar, m, w, alpha, qm = _scalars(inp, lib)
    f = _Frame(alpha, lib, form)
    I, cos, sin = lib.i, lib.cos, lib.sin
    wt = w * t
    c1, c2, c3 = cos(wt), cos(2 * wt), cos(3 * wt)
    s1, s2, s3 = sin(wt), sin(2 * wt), sin(3 * wt)

    a_br = (
        8 * f.lp({2: 1, -2: -1}, 4)
        + 8 * alpha * (c2 + 2) * f.lp({0: 1}, 4)
        + f.lp({4: 1, -4: -1}, 4) * (2 * wt * s2 + c2)
        + I * f.lp({4: 1, -4: 1, 0: -2}, 4) * (2 * wt * c2 - s2)
    )
    A = -(hbar**3) / (32 * m**4 * w**5) * a_br

    b_br = (
        248 * f.lp({3: 1, 1: -1, -1: -1, -3: 1}, 5)
        + 120 * alpha * f.lp({1: 1, -1: -1}, 5) * (c2 + 2)
        + 16 * f.lp({5: 1, 3: -2, 1: 1, -1: 1, -3: -2, -5: 1}, 5) * c3
        + f.lp({5: 1, 3: -1, -3: -1, -5: 1}, 5) * (30 * wt * s2 - 17 * c2)
        + 16 * f.lp({5: 1, 3: 4, 1: -5, -1: -5, -3: 4, -5: 1}, 5) * c1
        + I * (
            -16 * f.lp({5: 1, 3: -2, 1: 1, -1: -1, -3: 2, -5: -1}, 5) * s3
            + f.lp({5: 1, 3: -1, 1: -2, -1: 2, -3: 1, -5: -1}, 5) * (30 * wt * c2 + 17 * s2)
            - 16 * f.lp({5: 1, 3: 2, 1: -11, -1: 11, -3: -2, -5: -1}, 5) * s1
        )
    )
    B = hbar**3 / (288 * m**5 * w**7) * b_br

    c_br = (
        6 * f.lp({1: 1, -1: -1}, 3)
        - f.lp({3: 1, 1: -1, -1: 1, -3: -1}, 3) * c2
        + 2 * f.lp({3: 1, 1: 1, -1: -1, -3: -1}, 3) * c1
        + I * f.lp({3: 1, 1: -1, -1: -1, -3: 1}, 3) * (s2 - 2 * s1)
    )
    C = -(hbar**2) / (3 * m**3 * w**4) * c_br

    ca, c2a = f.coth(alpha), f.coth(2 * alpha)
    D = (
        hbar**2 / (4 * m**2 * w**2) * (2 * ca * (c2a * c2 - I * s2) + 2 * ca**2 - 1)
        + hbar * qm**2 / (m * w) * (2 * ca * c1 - I * 2 * s1 + ca)
        + qm**4
    )
    return A, B, C, D


@dataclass(frozen=True)
class ComponentBreakdown:
    """The four EPAC components at one time and their weights ``a4, a3^2, a3 Q_min, 1``."""

    t: float
    A: complex
    B: complex
    C: complex
    D: complex
    weights: tuple[float, float, float, float]

    def total(self) -> complex:
        wa, wb, wc, wd = self.weights
        return wa * self.A + wb * self.B + wc * self.C + wd * self.D

    def to_dict(self) -> dict:
        pair = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "t": self.t,
            "A": pair(self.A), "B": pair(self.B), "C": pair(self.C), "D": pair(self.D),
            "weights": list(self.weights),
            "total": pair(self.total()),
        }


def _weights(inp: EffectiveExpansion):
    return (inp.a4, inp.a3**2, inp.a3 * inp.q_min, 1.0)


def _combine(inp, comps):
    wa, wb, wc, wd = _weights(inp)
    A, B, C, D = comps
    return wa * A + wb * B + wc * C + wd * D


def _meta(inp: EffectiveExpansion) -> dict:
    d = inp.to_dict()
    d.pop("beta")
    return {"expansion": d}


def epac_q2_components(inp: EffectiveExpansion, t: float, form: str = "stable") -> ComponentBreakdown:
    A, B, C, D = (complex(np.asarray(x).item()) for x in _components(inp, np.asarray(float(t)), form=form))
    return ComponentBreakdown(float(t), A, B, C, D, _weights(inp))


def epac_q2(inp: EffectiveExpansion, times, form: str = "stable") -> CorrelationSeries:
    """Full EPAC ``<q^2(t) q^2(0)>`` including the secular ``t sin``/``t cos`` terms."""
    times = np.asarray(times, dtype=float)
    vals = _combine(inp, _components(inp, times, form=form))
    return CorrelationSeries(times, vals, "epac", inp.beta, 2, _meta(inp))


def epac_q2_truncated(inp: EffectiveExpansion, times) -> CorrelationSeries:
    """Truncated EPAC: the ``D(t)`` component alone (``V_beta`` cut at second order)."""
    times = np.asarray(times, dtype=float)
    vals = _components(inp.truncated(), times)[3]
    return CorrelationSeries(times, vals, "epac-truncated", inp.beta, 2, _meta(inp))


def epac_q_linear(inp: EffectiveExpansion, times) -> CorrelationSeries:
    """``<q(t) q(0)>_EPAC = hbar/(2 m w) [coth(alpha) cos(w t) - i sin(w t)] + Q_min^2``."""
    times = np.asarray(times, dtype=float)
    vals = _linear_real_time(inp, times)
    return CorrelationSeries(times, vals, "epac-linear", inp.beta, 1, _meta(inp))


def _linear_real_time(inp, t, lib=_NP):
    hbar, m, w, alpha, qm = _scalars(inp, lib)
    f = _Frame(alpha, lib, "stable")
    return hbar / (2 * m * w) * (f.coth(alpha) * lib.cos(w * t) - lib.i * lib.sin(w * t)) + qm**2


# ---------------------------------------------------------------------------
# imaginary time


def _check_tau(inp: EffectiveExpansion, tau):
    tau = np.asarray(tau, dtype=float)
    period = inp.beta * inp.hbar
    if tau.size and (tau.min() < -1e-12 * period or tau.max() > period * (1 + 1e-12)):
        raise DomainError(f"tau must lie in [0, {period}]")
    return np.clip(tau, 0.0, period)


def _imag_sum(f: _Frame, terms, k: int, x):
    """``sum_j lp(coef_j) * x^s_j * exp(-n_j x)`` for entries ``(coef, n, s)``."""
    exp = f.lib.exp
    out = 0
    for coef, n, s in terms:
        out = out + f.lp(coef, k) * (x**s if s else 1) * exp(-n * x)
    return out


def _imag_parts(inp: EffectiveExpansion, tau, lib=_NP, form="stable"):
    """Two-point function, summed three-point term and four-point term at ``tau``."""
    hbar, m, w, alpha, qm = _scalars(inp, lib)
    f = _Frame(alpha, lib, form)
    x = w * tau

    g = hbar / (2 * m * w) * _imag_sum(f, [({1: 1}, 1, 0), ({-1: 1}, -1, 0)], 1, x) + qm**2

    w3 = -inp.a3 / (6 * m**3 * w**4) * _imag_sum(
        f,
        [
            ({1: 1, 3: -1}, 2, 0),
            ({-3: 1, -1: -1}, -2, 0),
            ({3: 2, -1: -2}, 1, 0),
            ({1: 2, -3: -2}, -1, 0),
            ({1: 6, -1: -6}, 0, 0),
        ],
        3,
        x,
    )

    w4_a4 = -inp.a4 / (32 * m**4 * w**5) * (
        4 * alpha * _imag_sum(f, [({0: 4}, 0, 0), ({0: 1}, 2, 0), ({0: 1}, -2, 0)], 4, x)
        + _imag_sum(
            f,
            [
                ({4: 2, 0: -2}, 2, 1),
                ({-4: 2, 0: -2}, -2, 1),
                ({2: 8, -2: -8}, 0, 0),
                ({4: 1, 0: -1}, 2, 0),
                ({0: 1, -4: -1}, -2, 0),
            ],
            4,
            x,
        )
    )
    w4_a3 = inp.a3**2 / (288 * m**5 * w**7) * (
        60 * alpha * _imag_sum(f, [({1: 4, -1: -4}, 0, 0), ({1: 1, -1: -1}, 2, 0), ({1: 1, -1: -1}, -2, 0)], 5, x)
        + _imag_sum(
            f,
            [
                ({5: 30, 3: -30, 1: -30, -1: 30}, 2, 1),
                ({1: -30, -1: 30, -3: 30, -5: -30}, -2, 1),
                ({5: 16, 3: -32, 1: 16}, 3, 0),
                ({-1: 16, -3: -32, -5: 16}, -3, 0),
                ({5: -17, 3: 17, 1: 17, -1: -17}, 2, 0),
                ({1: -17, -1: 17, -3: 17, -5: -17}, -2, 0),
                ({5: 16, 3: 48, 1: -128, -1: 48, -3: 16}, 1, 0),
                ({3: 16, 1: 48, -1: -128, -3: 48, -5: 16}, -1, 0),
                ({3: 248, 1: -248, -1: -248, -3: 248}, 0, 0),
            ],
            5,
            x,
        )
    )
    return g, w3, w4_a4 + w4_a3


def imag_linear(inp: EffectiveExpansion, tau):
    """Two-point Green function ``<T q(tau) q(0)>`` in the LPA, ``0 <= tau <= beta hbar``."""
    tau = _check_tau(inp, tau)
    hbar, m, w, alpha, qm = _scalars(inp, _NP)
    f = _Frame(alpha, _NP, "stable")
    val = hbar / (2 * m * w) * _imag_sum(f, [({1: 1}, 1, 0), ({-1: 1}, -1, 0)], 1, w * tau) + qm**2
    return val if np.ndim(val) else float(val)


def _imag_q2_value(inp, tau, lib=_NP, form="stable"):
    hbar = _scalars(inp, lib)[0]
    qm = _scalars(inp, lib)[4]
    g, w3, w4 = _imag_parts(inp, tau, lib, form)
    g0 = _imag_parts(inp, 0 * tau, lib, form)[0]
    return hbar**3 * w4 + 2 * hbar**2 * qm * w3 + 2 * g**2 + g0**2 - 2 * qm**4


def imag_q2(inp: EffectiveExpansion, tau, form: str = "stable"):
    """``<T q^2(tau) q^2(0)>`` assembled from the LPA two-, three- and four-point functions."""
    tau = _check_tau(inp, tau)
    val = _imag_q2_value(inp, tau, _NP, form)
    return val if np.ndim(val) else float(val)


# ---------------------------------------------------------------------------
# diagnostics


def t0_dominant_terms(inp: EffectiveExpansion) -> tuple[float, float, float, float]:
    """Leading ``coth(alpha)`` power of ``a4 A(0)``, ``a3^2 B(0)``, ``a3 Q_min C(0)``, ``D(0)``.

    Dimensional prefactors follow those of the full components; in natural
    units they reduce to ``-(1/32) a4 coth^3 / w^5``, ``(5/96) a3^2 coth^5 / w^7``,
    ``-(1/3) a3 Q_min coth^2 / w^4`` and ``(3/4) coth^2 / w^2``.
    """
    hbar, m, w, a = inp.hbar, inp.mass, inp.omega_beta, inp.alpha
    ct = 1.0 / math.tanh(a)
    return (
        -(1 / 32) * hbar**3 / m**4 * inp.a4 / w**5 * ct**3,
        (5 / 96) * hbar**3 / m**5 * inp.a3**2 / w**7 * ct**5,
        -(1 / 3) * hbar**2 / m**3 * inp.a3 * inp.q_min / w**4 * ct**2,
        0.75 * hbar**2 / m**2 / w**2 * ct**2,
    )


def continuation_check(inp: EffectiveExpansion, taus=None, dps: int = 60) -> float:
    """Max ``|epac_q2(t=-i tau) - imag_q2(tau)|`` over ``taus``.

    The real-time expression is evaluated at complex time in ``dps``-digit
    arithmetic (its terms cancel down from ~``e^{6 alpha}``); the
    imaginary-time side uses the float64 stable form.
    """
    if taus is None:
        taus = np.linspace(0.0, inp.beta * inp.hbar, 101)
    taus = _check_tau(inp, taus)
    ref = np.atleast_1d(imag_q2(inp, taus))
    worst = 0.0
    with mpmath.workdps(dps):
        for tau, r in zip(taus, ref):
            t = mpmath.mpc(0, -mpmath.mpf(float(tau)))
            val = _combine(inp, _components(inp, t, _MP, "printed"))
            worst = max(worst, abs(complex(val) - r))
    return worst


def continuation_check_linear(inp: EffectiveExpansion, taus=None, dps: int = 40) -> float:
    """Same as :func:`continuation_check` for the linear-operator pair."""
    if taus is None:
        taus = np.linspace(0.0, inp.beta * inp.hbar, 101)
    taus = _check_tau(inp, taus)
    ref = np.atleast_1d(imag_linear(inp, taus))
    worst = 0.0
    with mpmath.workdps(dps):
        for tau, r in zip(taus, ref):
            t = mpmath.mpc(0, -mpmath.mpf(float(tau)))
            worst = max(worst, abs(complex(_linear_real_time(inp, t, _MP)) - r))
    return worst


def reflection_residual(inp: EffectiveExpansion, taus=None) -> float:
    """Max ``|G(tau) - G(beta hbar - tau)|`` of the LPA ``q^2`` Green function (reported, not asserted)."""
    period = inp.beta * inp.hbar
    if taus is None:
        taus = np.linspace(0.0, period, 101)
    return float(np.max(np.abs(imag_q2(inp, taus) - imag_q2(inp, period - np.asarray(taus)))))
