"""Path-integral Monte Carlo for the source-tilted ensemble.

A ring of ``P`` beads with the primitive action

    S/hbar = sum_i [ m P / (2 beta hbar^2) (q_{i+1} - q_i)^2 + (beta/P) (V(q_i) - J q_i) ]

is sampled by Metropolis single-bead moves plus whole-ring translations.
Per-sweep bead averages of ``q^k`` are stored and reduced with blocked
standard errors.  Random numbers come from ``numpy.random.default_rng(seed)``
and are handed to a compiled kernel in chunks, so a seed fixes the chain
bit for bit.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigError, SamplingError
from .model import PolynomialPotential

TARGET_ACCEPTANCE = 0.45
ACCEPTANCE_RANGE = (0.30, 0.60)
_CHUNK = 4096
_TUNE_WINDOW = 500


class NonEquilibrationWarning(UserWarning):
    """Blocked means of the two chain halves disagree."""


@dataclass(frozen=True)
class PimcConfig:
    """Sampler settings.

    ``step_bead`` and ``step_shift`` are starting widths; ``None`` picks a
    free-ring estimate.  With ``tune=True`` both are rescaled during burn-in
    toward ``TARGET_ACCEPTANCE``.
    """

    P: int = 64
    sweeps: int = 200_000
    burn_in: int = 20_000
    step_bead: float | None = None
    step_shift: float | None = None
    seed: int = 20240101
    min_blocks: int = 20
    tune: bool = True

    def __post_init__(self):
        if int(self.P) != self.P or self.P < 8:
            raise ConfigError(f"P must be an integer >= 8, got {self.P!r}")
        if self.burn_in < 0 or self.sweeps <= self.burn_in:
            raise ConfigError("need sweeps > burn_in >= 0")
        if self.min_blocks < 2:
            raise ConfigError("min_blocks must be at least 2")
        if (self.sweeps - self.burn_in) < 4 * self.min_blocks:
            raise ConfigError("too few production sweeps for blocked errors")
        for name in ("step_bead", "step_shift"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class BlockedMean:
    mean: float
    stderr: float
    block_size: int
    n_blocks: int
    plateau: bool


@dataclass(frozen=True)
class PimcEstimate:
    """Blocked estimate of the path-averaged ``<q>`` at source ``J``."""

    mean: float
    stderr: float
    acceptance: float
    P: int
    sweeps: int
    J: float = 0.0
    seed: int = 0
    acceptance_shift: float = float("nan")
    block_size: int = 1
    n_blocks: int = 0
    plateau: bool = True

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ChainResult:
    """Raw production output of one chain."""

    moments: np.ndarray  # (n_sweeps, K): bead average of q^1 .. q^K
    link2: np.ndarray  # (n_sweeps,): link average of (q_{i+1} - q_i)^2
    acceptance: float
    acceptance_shift: float
    steps: tuple[float, float]
    config: PimcConfig
    J: float
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# kernel


@numba.njit(cache=True)
def _poly(c, x):
    acc = 0.0
    for k in range(c.size - 1, -1, -1):
        acc = acc * x + c[k]
    return acc


@numba.njit(cache=True)
def _run(q, c, spring, dtau, step_b, step_t, rnd, moments, link2, record):
    P = q.size
    n = rnd.shape[0]
    K = moments.shape[1]
    acc_b = 0
    acc_t = 0
    v = np.empty(P)
    for i in range(P):
        v[i] = _poly(c, q[i])
    for s in range(n):
        for i in range(P):
            qo = q[i]
            qn = qo + step_b * (2.0 * rnd[s, i, 0] - 1.0)
            ql = q[i - 1]
            qr = q[(i + 1) % P]
            vn = _poly(c, qn)
            dk = (qn - ql) ** 2 + (qr - qn) ** 2 - (qo - ql) ** 2 - (qr - qo) ** 2
            ds = spring * dk + dtau * (vn - v[i])
            if ds <= 0.0 or rnd[s, i, 1] < np.exp(-ds):
                q[i] = qn
                v[i] = vn
                acc_b += 1
        d = step_t * (2.0 * rnd[s, P, 0] - 1.0)
        ds = 0.0
        for i in range(P):
            ds += _poly(c, q[i] + d) - v[i]
        ds *= dtau
        if ds <= 0.0 or rnd[s, P, 1] < np.exp(-ds):
            for i in range(P):
                q[i] += d
                v[i] = _poly(c, q[i])
            acc_t += 1
        if record:
            for k in range(K):
                moments[s, k] = 0.0
            l2 = 0.0
            for i in range(P):
                x = q[i]
                p = 1.0
                for k in range(K):
                    p *= x
                    moments[s, k] += p
                l2 += (q[(i + 1) % P] - x) ** 2
            for k in range(K):
                moments[s, k] /= P
            link2[s] = l2 / P
    return acc_b, acc_t


# ---------------------------------------------------------------------------
# driver


def _initial_steps(cfg: PimcConfig, beta, mass, hbar):
    bead = cfg.step_bead or 2.0 * np.sqrt(beta * hbar**2 / (2 * mass * cfg.P))
    shift = cfg.step_shift or 1.0
    return float(bead), float(shift)


def run_chain(coeffs, beta: float, J: float, cfg: PimcConfig, mass: float = 1.0, hbar: float = 1.0,
              n_moments: int | None = None) -> ChainResult:
    """Run one chain for the polynomial ``sum_k coeffs[k] q^k - J q``.

    ``coeffs`` may be a :class:`PolynomialPotential` or a raw coefficient
    sequence (the latter allows ``V = 0`` for free-ring checks).
    """
    if isinstance(coeffs, PolynomialPotential):
        mass, hbar = coeffs.mass, coeffs.hbar
        coeffs = coeffs.coeffs
    c = np.array(coeffs, dtype=float)
    if c.size < 2:
        c = np.concatenate([c, np.zeros(2 - c.size)])
    c[1] -= J
    if not (beta > 0 and np.isfinite(beta)):
        raise ConfigError("beta must be positive")
    K = n_moments or max(2, len(coeffs) - 1)
    P = cfg.P
    spring = mass * P / (2 * beta * hbar**2)
    dtau = beta / P
    rng = np.random.default_rng(cfg.seed)
    q = np.zeros(P)
    step_b, step_t = _initial_steps(cfg, beta, mass, hbar)
    dummy_m = np.zeros((1, K))
    dummy_l = np.zeros(1)

    done = 0
    while done < cfg.burn_in:
        n = min(_TUNE_WINDOW, cfg.burn_in - done)
        rnd = rng.random((n, P + 1, 2))
        ab, at = _run(q, c, spring, dtau, step_b, step_t, rnd, dummy_m, dummy_l, False)
        if cfg.tune:
            step_b *= np.clip((ab / (n * P)) / TARGET_ACCEPTANCE, 0.5, 2.0)
            step_t *= np.clip((at / n) / TARGET_ACCEPTANCE, 0.5, 2.0)
        done += n

    n_prod = cfg.sweeps - cfg.burn_in
    moments = np.empty((n_prod, K))
    link2 = np.empty(n_prod)
    acc_b = acc_t = 0
    for lo in range(0, n_prod, _CHUNK):
        n = min(_CHUNK, n_prod - lo)
        rnd = rng.random((n, P + 1, 2))
        ab, at = _run(q, c, spring, dtau, step_b, step_t, rnd, moments[lo:lo + n], link2[lo:lo + n], True)
        acc_b += ab
        acc_t += at
    return ChainResult(moments, link2, acc_b / (n_prod * P), acc_t / n_prod, (step_b, step_t), cfg, J)


def blocked_mean(x, min_blocks: int = 20, tol: float = 0.2) -> BlockedMean:
    """Mean with a blocked standard error.

    Block size doubles while at least ``min_blocks`` blocks remain.  The
    plateau is the first level whose error is within ``tol`` (relative) of
    every larger-block estimate; the reported error is the larger of that
    level's value and the mean over the remaining levels.  A slowly creeping
    curve therefore lands late rather than early.  Without a plateau the
    largest estimate seen is returned and ``plateau`` is False.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 2 * min_blocks:
        raise SamplingError(f"need at least {2 * min_blocks} samples, got {x.size}")
    levels = []
    b = 1
    while x.size // b >= min_blocks:
        nb = x.size // b
        blocks = x[: nb * b].reshape(nb, b).mean(axis=1)
        levels.append((b, nb, blocks.std(ddof=1) / np.sqrt(nb)))
        b *= 2
    errs = np.array([lv[2] for lv in levels])
    for i in range(len(levels) - 2):
        tail = errs[i:]
        if errs[i] > 0 and np.all(np.abs(tail / errs[i] - 1) < tol):
            b, nb, _ = levels[i]
            return BlockedMean(float(x.mean()), float(max(errs[i], tail.mean())), b, nb, True)
    b, nb, err = max(levels, key=lambda lv: lv[2])
    return BlockedMean(float(x.mean()), float(err), b, nb, False)


def _drift_check(x, min_blocks):
    half = x.size // 2
    a = blocked_mean(x[:half], min_blocks // 2 or 2)
    b = blocked_mean(x[half:], min_blocks // 2 or 2)
    z = abs(a.mean - b.mean) / np.hypot(a.stderr, b.stderr)
    if z > 4:
        warnings.warn(f"chain halves differ by {z:.1f} sigma", NonEquilibrationWarning, stacklevel=3)
    return z


def _check_acceptance(acc):
    lo, hi = ACCEPTANCE_RANGE
    if not lo <= acc <= hi:
        raise SamplingError(f"single-bead acceptance {acc:.3f} outside [{lo}, {hi}] after tuning")


def sample_tilted_q(p: PolynomialPotential, beta: float, J: float, cfg: PimcConfig | None = None) -> PimcEstimate:
    """Estimate ``Q(J) = <q>_J`` with a blocked standard error."""
    cfg = cfg or PimcConfig()
    chain = run_chain(p, beta, J, cfg)
    _check_acceptance(chain.acceptance)
    x = chain.moments[:, 0]
    _drift_check(x, cfg.min_blocks)
    bm = blocked_mean(x, cfg.min_blocks)
    return PimcEstimate(bm.mean, bm.stderr, chain.acceptance, cfg.P, cfg.sweeps, float(J), cfg.seed,
                        chain.acceptance_shift, bm.block_size, bm.n_blocks, bm.plateau)


def moment_estimate(chain: ChainResult, k: int) -> BlockedMean:
    """Blocked estimate of the bead-averaged ``<q^k>`` from a chain."""
    if not 1 <= k <= chain.moments.shape[1]:
        raise ConfigError(f"moment {k} not recorded")
    return blocked_mean(chain.moments[:, k - 1], chain.config.min_blocks)


def discretized_harmonic_q2(omega: float, beta: float, P: int, mass: float = 1.0, hbar: float = 1.0) -> float:
    """Exact ``<q^2>`` of the ``P``-bead primitive harmonic ring."""
    k = np.arange(P)
    lam = omega**2 + (4 * P**2 / (beta**2 * hbar**2)) * np.sin(np.pi * k / P) ** 2
    return float(np.sum(1.0 / lam) / (beta * mass))


def thermo_integrate(q_of_j) -> list[tuple[float, float, float]]:
    """``w(J) - w(0) = int_0^J Q dJ'`` by the trapezoid rule.

    Parameters
    ----------
    q_of_j : sequence of (J, PimcEstimate)
        Ascending in ``J`` and containing ``J = 0``.

    Returns
    -------
    list of (J, value, stderr)
        Errors propagate assuming independent points.
    """
    js = np.array([float(j) for j, _ in q_of_j])
    mu = np.array([e.mean for _, e in q_of_j])
    sd = np.array([e.stderr for _, e in q_of_j])
    if js.size == 0 or np.any(np.diff(js) <= 0):
        raise ConfigError("J grid must be strictly ascending")
    zero = np.flatnonzero(js == 0.0)
    if zero.size != 1:
        raise ConfigError("J grid must contain 0")
    z = int(zero[0])
    out = []
    for i, j in enumerate(js):
        lo, hi = sorted((z, i))
        w = np.zeros(js.size)
        for a in range(lo, hi):
            h = js[a + 1] - js[a]
            w[a] += h / 2
            w[a + 1] += h / 2
        sign = 1.0 if i >= z else -1.0
        out.append((float(j), float(sign * w @ mu), float(np.sqrt(np.sum((w * sd) ** 2)))))
    return out
