"""Physical system definitions: polynomial potentials and temperatures.

Natural units (hbar = k_B = m = 1) are the default, but every dimensional
parameter is kept explicit.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PolynomialPotential:
    """Confining one-dimensional potential ``V(q) = sum_k c_k q^k``.

    Parameters
    ----------
    coeffs : sequence of float
        Dense coefficients from order 0 upward.
    mass, hbar : float
        Particle mass and reduced Planck constant.
    """

    coeffs: tuple[float, ...]
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        # trailing zeros carry no information; strip so that K is the true degree
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)
        if len(c) < 3:
            raise ConfigError("potential must have degree >= 2")
        if not all(math.isfinite(x) for x in c):
            raise ConfigError("potential coefficients must be finite")
        if len(c) % 2 == 0 or c[-1] <= 0.0:
            # odd leading order or negative leading coefficient is not confining
            raise ConfigError("leading term must be of even order with a positive coefficient")
        if not (self.mass > 0 and self.hbar > 0):
            raise ConfigError("mass and hbar must be positive")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, q):
        return evaluate_potential(self, q)

    def derivative(self, q, order: int = 1):
        """``d^order V / dq^order`` evaluated at ``q``."""
        poly = np.polynomial.Polynomial(self.coeffs).deriv(order)
        return poly(np.asarray(q, dtype=float))

    def tilted(self, source: float) -> "PolynomialPotential":
        """The potential ``V(q) - J q`` of the source-tilted Hamiltonian."""
        c = list(self.coeffs)
        c[1] -= float(source)
        return PolynomialPotential(tuple(c), self.mass, self.hbar)

    @property
    def is_even(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1::2])

    def to_dict(self) -> dict:
        return {"coeffs": list(self.coeffs), "mass": self.mass, "hbar": self.hbar}

    @classmethod
    def from_dict(cls, d: dict) -> "PolynomialPotential":
        try:
            return cls(tuple(d["coeffs"]), float(d.get("mass", 1.0)), float(d.get("hbar", 1.0)))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad potential specification: {d!r}") from exc

    def digest(self) -> str:
        """Short stable hash used to tag serialized outputs."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class ThermoState:
    """Inverse temperature ``beta = 1/(k_B T)`` with ``k_B = 1``."""

    beta: float = field()

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ConfigError(f"beta must be finite and positive, got {self.beta}")


def evaluate_potential(p: PolynomialPotential, q):
    """Return ``sum_k c_k q^k`` (Horner scheme); accepts scalars or arrays."""
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    for c in reversed(p.coeffs):
        out = out * q + c
    return out if out.ndim else float(out)


def harmonic(omega: float = 1.0, mass: float = 1.0, hbar: float = 1.0) -> PolynomialPotential:
    """``V(q) = m omega^2 q^2 / 2``."""
    return PolynomialPotential((0.0, 0.0, 0.5 * mass * omega**2), mass, hbar)


def asymmetric_anharmonic() -> PolynomialPotential:
    """``V(q) = q^2/2 + q^3/10 + q^4/100`` in natural units; the benchmark system."""
    return PolynomialPotential((0.0, 0.0, 0.5, 0.1, 0.01))
