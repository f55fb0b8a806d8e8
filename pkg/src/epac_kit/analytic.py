"""Closed-form ``<q^2(t) q^2(0)>`` correlators of the harmonic oscillator.

Exact quantum, exact Kubo-transformed (canonical), centroid MD with the
classical and with the effective classical operator, and ring-polymer MD at
a finite number of beads.  All functions return a
:class:`~epac_kit.series.CorrelationSeries`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .series import CorrelationSeries

DEFAULT_BEADS = 1000


@dataclass(frozen=True)
class HarmonicParams:
    """``V(q) = m omega^2 q^2 / 2`` at inverse temperature ``beta``."""

    omega: float
    beta: float
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("omega", "beta", "mass", "hbar"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be positive, got {val!r}")

    @property
    def alpha(self) -> float:
        return 0.5 * self.beta * self.hbar * self.omega

    @property
    def length2(self) -> float:
        """``hbar / (2 m omega)``, the ground-state ``<q^2>``."""
        return self.hbar / (2 * self.mass * self.omega)

    def meta(self) -> dict:
        return {"omega": self.omega, "mass": self.mass, "hbar": self.hbar}


@dataclass(frozen=True)
class RpmdSpec:
    """Ring-polymer normal-mode frequencies for ``P`` beads."""

    P: int
    hp: HarmonicParams
    frequencies: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.P) != self.P or self.P < 1:
            raise ConfigError(f"P must be a positive integer, got {self.P!r}")
        n = np.arange(1, self.P + 1)
        w2 = self.hp.omega**2 + (2 * self.k_P / self.hp.mass) * (1 - np.cos(2 * np.pi * n / self.P))
        w = np.sqrt(w2)
        w[-1] = self.hp.omega  # cos(2 pi) = 1 exactly
        object.__setattr__(self, "frequencies", w)

    @property
    def k_P(self) -> float:
        hp = self.hp
        return hp.mass * self.P**2 / (hp.beta**2 * hp.hbar**2)


def _coth(x):
    return 1.0 / np.tanh(x)


def _series(times, values, method, hp, extra=None):
    meta = hp.meta()
    if extra:
        meta.update(extra)
    return CorrelationSeries(np.asarray(times, dtype=float), np.asarray(values, dtype=complex), method, hp.beta, 2, meta)


def harmonic_exact_q2(hp: HarmonicParams, times) -> CorrelationSeries:
    """Exact quantum ``<q^2(t) q^2(0)>``; complex."""
    t = np.asarray(times, dtype=float)
    c = _coth(hp.alpha)
    wt = 2 * hp.omega * t
    vals = hp.length2**2 * (2 * c * (_coth(2 * hp.alpha) * np.cos(wt) - 1j * np.sin(wt)) + 2 * c**2 - 1)
    return _series(t, vals, "harmonic-exact", hp)


def harmonic_canonical_q2(hp: HarmonicParams, times) -> CorrelationSeries:
    """Exact Kubo-transformed ``<q^2(t) q^2(0)>``; real."""
    t = np.asarray(times, dtype=float)
    c = _coth(hp.alpha)
    vals = hp.length2**2 * ((1 / hp.alpha) * c * np.cos(2 * hp.omega * t) + 2 * c**2 - 1)
    return _series(t, vals, "harmonic-canonical", hp)


def cmd_classical_op_q2(hp: HarmonicParams, times) -> CorrelationSeries:
    """Centroid MD with the classical operator ``q_c^2``."""
    t = np.asarray(times, dtype=float)
    scale = 1.0 / (hp.beta**2 * hp.mass**2 * hp.omega**4)
    return _series(t, scale * (np.cos(2 * hp.omega * t) + 2), "cmd-classical-op", hp)


def cmd_effective_classical_op_q2(hp: HarmonicParams, times) -> CorrelationSeries:
    """Centroid MD with the effective classical operator ``(q^2)^c``."""
    t = np.asarray(times, dtype=float)
    scale = 1.0 / (hp.beta**2 * hp.mass**2 * hp.omega**4)
    vals = scale * (np.cos(2 * hp.omega * t) + hp.alpha * _coth(hp.alpha) + 1)
    return _series(t, vals, "cmd-effective-classical-op", hp)


def rpmd_harmonic_q2(hp: HarmonicParams, times, P: int = DEFAULT_BEADS) -> CorrelationSeries:
    """Ring-polymer MD ``<q^2(t) q^2(0)>`` at ``P`` beads.

    The double sum over mode pairs factorizes as ``(sum_n omega_n^-2)^2``.
    """
    t = np.asarray(times, dtype=float)
    w = RpmdSpec(P, hp).frequencies
    inv2 = 1.0 / w**2
    osc = np.zeros(t.shape)
    # chunk the outer product to keep memory flat for long time grids
    for lo in range(0, t.size, 512):
        blk = t.reshape(-1)[lo:lo + 512]
        osc.reshape(-1)[lo:lo + 512] = (np.cos(2 * np.outer(blk, w)) + 1) @ (inv2**2)
    vals = (osc + inv2.sum() ** 2) / (hp.beta**2 * hp.mass**2)
    return _series(t, vals, "rpmd", hp, {"P": int(P)})


def compare_harmonic(hp: HarmonicParams, times, P: int = DEFAULT_BEADS) -> dict[str, CorrelationSeries]:
    """The four comparison curves keyed ``canonical, cmd_co, cmd_eco, rpmd``."""
    return {
        "canonical": harmonic_canonical_q2(hp, times),
        "cmd_co": cmd_classical_op_q2(hp, times),
        "cmd_eco": cmd_effective_classical_op_q2(hp, times),
        "rpmd": rpmd_harmonic_q2(hp, times, P),
    }
