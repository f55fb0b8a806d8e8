"""Command-line front end: ``epac-kit <subcommand> --config run.json --out outdir``.

Every subcommand reads one JSON config, validates it completely before any
computation, writes CSV/JSON into ``--out`` and exits 0 only if all checks
it ran passed.  Each output file carries the hash of the resolved config.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import analytic, effpot, epac, pimc, spectral
from .errors import ConfigError, EpacError
from .model import PolynomialPotential, asymmetric_anharmonic, harmonic
from .series import fmt

log = logging.getLogger("epac_kit")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

PRESETS = {
    "asymmetric": asymmetric_anharmonic,
    "harmonic": lambda: harmonic(1.0),
}

FIGURE_BETAS = {
    "fig1": (1.0, 10.0),
    "fig2": (0.1, 1.0, 10.0, 100.0),
    "fig3": (0.1, 1.0, 10.0),
    "fig4": (0.1, 1.0, 10.0),
}

TABLE_TOL = 1e-3
T0_TOL = 0.05


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration; see ``README.md`` for the JSON layout."""

    potential: PolynomialPotential
    betas: tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    backend: str = "spectral"
    expansion: str = "fit"
    grid: spectral.GridSpec | None = None
    n_states: int | None = None
    trunc_tol: float = spectral.TRUNCATION_TOL
    leak_tol: float = spectral.LEAK_TOL
    q_window: tuple[float, float] = (-4.0, 2.0)
    n_sources: int = 201
    fit_window: float = 0.5
    fit_degree: int = 6
    t_max: float = 25.0
    n_t: int = 1001
    n_tau: int = 101
    rpmd_beads: int = analytic.DEFAULT_BEADS
    pimc: pimc.PimcConfig = field(default_factory=pimc.PimcConfig)
    pimc_sources: tuple[float, ...] = (0.0,)
    pimc_suite: bool = False
    figure_betas: dict = field(default_factory=lambda: dict(FIGURE_BETAS))

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        known = {
            "potential", "betas", "backend", "expansion", "grid", "solver", "effpot",
            "time", "tau", "rpmd_beads", "pimc", "seed", "figures",
        }
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        pot = doc.get("potential", "asymmetric")
        if isinstance(pot, str):
            if pot not in PRESETS:
                raise ConfigError(f"unknown potential preset {pot!r}; choose from {sorted(PRESETS)}")
            potential = PRESETS[pot]()
        elif isinstance(pot, dict):
            potential = PolynomialPotential.from_dict(pot)
        else:
            raise ConfigError("potential must be a preset name or {coeffs, mass, hbar}")

        betas = tuple(float(b) for b in doc.get("betas", cls.betas))
        if not betas or any(not (np.isfinite(b) and b > 0) for b in betas):
            raise ConfigError(f"betas must be positive, got {betas}")
        backend = doc.get("backend", "spectral")
        if backend not in ("spectral", "pimc"):
            raise ConfigError(f"backend must be 'spectral' or 'pimc', got {backend!r}")
        expansion = doc.get("expansion", "fit")
        if expansion not in ("fit", "direct"):
            raise ConfigError(f"expansion must be 'fit' or 'direct', got {expansion!r}")

        grid, n_states = None, None
        if doc.get("grid") is not None:
            g = dict(doc["grid"])
            try:
                n_states = int(g.pop("n_states"))
            except KeyError:
                raise ConfigError("explicit grid needs n_states") from None
            grid = spectral.GridSpec(**g)
            if not 1 <= n_states < grid.n_points:
                raise ConfigError("need 1 <= n_states < n_points")
        solver = dict(doc.get("solver", {}))
        trunc_tol = float(solver.pop("trunc_tol", spectral.TRUNCATION_TOL))
        leak_tol = float(solver.pop("leak_tol", spectral.LEAK_TOL))
        if solver:
            raise ConfigError(f"unknown solver keys: {sorted(solver)}")
        if not (0 < trunc_tol < 1 and 0 < leak_tol < 1):
            raise ConfigError("solver tolerances must lie in (0, 1)")

        ep = dict(doc.get("effpot", {}))
        q_window = tuple(float(x) for x in ep.pop("q_window", (-4.0, 2.0)))
        n_sources = int(ep.pop("n_sources", 201))
        fit_window = float(ep.pop("window", 0.5))
        fit_degree = int(ep.pop("degree", 6))
        if ep:
            raise ConfigError(f"unknown effpot keys: {sorted(ep)}")
        if len(q_window) != 2 or q_window[0] >= q_window[1]:
            raise ConfigError("effpot.q_window must be an ascending pair")
        if n_sources < 11 or fit_window <= 0 or fit_degree < 4:
            raise ConfigError("need n_sources >= 11, window > 0, degree >= 4")

        tm = dict(doc.get("time", {}))
        t_max, n_t = float(tm.pop("t_max", 25.0)), int(tm.pop("n_t", 1001))
        if tm or not (t_max > 0 and n_t >= 2):
            raise ConfigError("time needs t_max > 0 and n_t >= 2 (keys t_max, n_t)")
        n_tau = int(dict(doc.get("tau", {})).get("n_tau", 101))
        if n_tau < 2:
            raise ConfigError("tau.n_tau must be >= 2")
        beads = int(doc.get("rpmd_beads", analytic.DEFAULT_BEADS))
        if beads < 1:
            raise ConfigError("rpmd_beads must be >= 1")

        pc = dict(doc.get("pimc", {}))
        sources = tuple(float(j) for j in pc.pop("sources", (0.0,)))
        suite = bool(pc.pop("validate", False))
        if "seed" in doc:
            pc.setdefault("seed", int(doc["seed"]))
        try:
            pcfg = pimc.PimcConfig(**pc)
        except TypeError as exc:
            raise ConfigError(f"bad pimc settings: {exc}") from None

        figs = dict(FIGURE_BETAS)
        for k, v in dict(doc.get("figures", {})).items():
            if k not in FIGURE_BETAS:
                raise ConfigError(f"unknown figure {k!r}")
            figs[k] = tuple(float(b) for b in v)

        return cls(potential, betas, backend, expansion, grid, n_states, trunc_tol, leak_tol, q_window,
                   n_sources, fit_window, fit_degree, t_max, n_t, n_tau, beads, pcfg, sources, suite, figs)

    def to_dict(self) -> dict:
        return {
            "potential": self.potential.to_dict(),
            "betas": list(self.betas),
            "backend": self.backend,
            "expansion": self.expansion,
            "grid": None if self.grid is None else {**self.grid.to_dict(), "n_states": self.n_states},
            "solver": {"trunc_tol": self.trunc_tol, "leak_tol": self.leak_tol},
            "effpot": {"q_window": list(self.q_window), "n_sources": self.n_sources,
                       "window": self.fit_window, "degree": self.fit_degree},
            "time": {"t_max": self.t_max, "n_t": self.n_t},
            "tau": {"n_tau": self.n_tau},
            "rpmd_beads": self.rpmd_beads,
            "pimc": {**self.pimc.to_dict(), "sources": list(self.pimc_sources), "validate": self.pimc_suite},
            "figures": {k: list(v) for k, v in sorted(self.figure_betas.items())},
        }

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_t)

    def solver_kw(self) -> dict:
        return {"grid": self.grid, "n_states": self.n_states, "trunc_tol": self.trunc_tol, "leak_tol": self.leak_tol}


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig.from_dict({})
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.from_dict(doc)


# ---------------------------------------------------------------------------
# shared compute


def solve(p: PolynomialPotential, beta: float, cfg: RunConfig) -> spectral.Spectrum:
    """Spectrum on the configured grid, or an automatic one."""
    if cfg.grid is not None:
        s = spectral.solve_eigen(p, cfg.grid, cfg.n_states, cfg.leak_tol)
    else:
        g, n = spectral.auto_grid(p, beta, trunc_tol=cfg.trunc_tol)
        s = spectral.solve_eigen(p, g, n, cfg.leak_tol)
    spectral.check_truncation(s, beta, cfg.trunc_tol)
    return s


def compute_expansion(cfg: RunConfig, beta: float, cache: dict | None = None) -> effpot.EffectiveExpansion:
    if cache is not None and beta in cache:
        return cache[beta][0]
    p, kw = cfg.potential, cfg.solver_kw()
    curve = gd = None
    if cfg.expansion == "direct":
        exp = effpot.expansion_direct(p, beta, **kw)
    else:
        gd, curve = effpot.effective_potential(p, beta, cfg.q_window, cfg.n_sources, **kw)
        exp = effpot.extract_expansion(curve, beta, cfg.fit_window, cfg.fit_degree, p.mass, p.hbar)
    if cache is not None:
        cache[beta] = (exp, gd, curve)
    return exp


def _is_reference_potential(p: PolynomialPotential) -> bool:
    return p == asymmetric_anharmonic()


def _check(name: str, value: float, tol: float, **detail) -> dict:
    ok = bool(np.isfinite(value) and value <= tol)
    return {"name": name, "passed": ok, "value": float(value), "tolerance": tol, **detail}


def _failed(name: str, exc: Exception) -> dict:
    return {"name": name, "passed": False, "error": f"{type(exc).__name__}: {exc}"}


# ---------------------------------------------------------------------------
# output


class Writer:
    """Writes outputs under one directory, stamping the config hash into each."""

    def __init__(self, out: Path, cfg: RunConfig):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.hash = cfg.digest()
        self.files: list[str] = []

    def json(self, name: str, doc: dict) -> Path:
        path = self.out / name
        path.write_text(json.dumps({"config_hash": self.hash, **doc}, indent=1, sort_keys=True) + "\n")
        self.files.append(name)
        return path

    def csv(self, name: str, columns: dict[str, np.ndarray]) -> Path:
        buf = io.StringIO()
        buf.write(f"# config_hash={self.hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(columns))
        for row in zip(*columns.values()):
            w.writerow([fmt(x) for x in row])
        path = self.out / name
        path.write_text(buf.getvalue())
        self.files.append(name)
        return path

    def manifest(self):
        self.json("config.json", {"config": self.cfg.to_dict()})


def _tag(beta: float) -> str:
    return f"beta{beta:g}"


# ---------------------------------------------------------------------------
# subcommand bodies (importable, return (doc, passed))


def cmd_table1(cfg: RunConfig, w: Writer) -> bool:
    if cfg.backend != "spectral":
        raise ConfigError("table1 needs the spectral backend; the Monte Carlo backend cannot resolve a3/a4")
    rows, checks = [], []
    ref = _is_reference_potential(cfg.potential)
    for beta in cfg.betas:
        exp = compute_expansion(cfg, beta)
        row = {"beta": beta, "Q_min": exp.q_min, "omega_beta": exp.omega_beta, "a3": exp.a3, "a4": exp.a4}
        if ref and beta in effpot.TABLE1:
            dev = effpot.relative_deviation(exp)
            row["deviation"] = dev
            checks.append(_check(f"table1 beta={beta:g}", max(abs(v) for v in dev.values()), TABLE_TOL))
        rows.append(row)
        log.info("beta=%g  Q_min=%.8f  omega=%.8f  a3=%.8f  a4=%.8f", beta, *list(row.values())[1:5])
    passed = all(c["passed"] for c in checks)
    w.json("table1.json", {"rows": rows, "checks": checks, "passed": passed, "expansion": cfg.expansion})
    cols = {k: np.array([r[k] for r in rows]) for k in ("beta", "Q_min", "omega_beta", "a3", "a4")}
    w.csv("table1.csv", cols)
    return passed


def _fig1(cfg, w, checks):
    for beta in cfg.figure_betas["fig1"]:
        hp = analytic.HarmonicParams(1.0, beta)
        t = cfg.times
        cur = analytic.compare_harmonic(hp, t, cfg.rpmd_beads)
        s = solve(harmonic(1.0), beta, cfg)
        kubo = spectral.kubo_corr(s, beta, t, 2).real
        kubo2 = spectral.kubo2_corr(s, beta, t).real
        w.csv(f"fig1_{_tag(beta)}.csv", {
            "t": t,
            "exact_canonical": cur["canonical"].real,
            "cmd_co": cur["cmd_co"].real,
            "cmd_eco": cur["cmd_eco"].real,
            "rpmd": cur["rpmd"].real,
            "canonical_spectral": kubo,
            "kubo2_spectral": kubo2,
        })
        c0 = cur["canonical"].real[0]
        checks.append(_check(f"fig1 rpmd t=0 beta={beta:g}", abs(cur["rpmd"].real[0] - c0) / abs(c0), 1e-3))
        checks.append(_check(f"fig1 cmd_eco=kubo2 beta={beta:g}", np.max(np.abs(cur["cmd_eco"].real - kubo2)), 1e-6))


def _fig2(cfg, w, checks, cache):
    p = cfg.potential
    for beta in cfg.figure_betas["fig2"]:
        if cfg.expansion == "direct" or beta not in cache or cache[beta][2] is None:
            gd, curve = effpot.effective_potential(p, beta, cfg.q_window, cfg.n_sources, **cfg.solver_kw())
        else:
            curve = cache[beta][2]
        v = curve.normalized()
        w.csv(f"fig2_{_tag(beta)}.csv", {"Q": curve.q_grid, "V": v})
        checks.append(_check(f"fig2 min=0 beta={beta:g}", abs(float(v.min())), 0.0))
    q = np.linspace(*cfg.q_window, 601)
    vc = p(q)
    w.csv("fig2_classical.csv", {"Q": q, "V": vc - vc.min()})


def _fig34(cfg, w, checks, cache, which):
    p = cfg.potential
    for beta in cfg.figure_betas[which]:
        exp = compute_expansion(cfg, beta, cache)
        t = cfg.times
        model = epac.epac_q2(exp, t) if which == "fig3" else epac.epac_q2_truncated(exp, t)
        exact = spectral.exact_corr(solve(p, beta, cfg), 2, beta, t)
        label = "epac" if which == "fig3" else "epac_truncated"
        w.csv(f"{which}_{_tag(beta)}.csv", {
            "t": t,
            f"{label}_re": model.real, f"{label}_im": model.imag,
            "exact_re": exact.real, "exact_im": exact.imag,
        })
        if which == "fig3":
            rel = abs(model.real[0] - exact.real[0]) / abs(exact.real[0])
            checks.append(_check(f"fig3 t=0 beta={beta:g}", rel, T0_TOL))


def cmd_figures(cfg: RunConfig, w: Writer, which: str) -> bool:
    wanted = sorted(FIGURE_BETAS) if which == "all" else [which]
    checks: list[dict] = []
    cache: dict = {}
    for fig in wanted:
        if fig == "fig1":
            _fig1(cfg, w, checks)
        elif fig == "fig2":
            _fig2(cfg, w, checks, cache)
        else:
            _fig34(cfg, w, checks, cache, fig)
    passed = all(c["passed"] for c in checks)
    w.json(f"figures_{which}.json", {"checks": checks, "passed": passed, "files": sorted(w.files)})
    return passed


def _suite(name, fn, checks):
    try:
        checks.extend(fn())
    except EpacError as exc:
        checks.append(_failed(name, exc))


def cmd_validate(cfg: RunConfig, w: Writer) -> bool:
    checks: list[dict] = []
    hp_betas = (0.1, 1.0, 10.0)
    t = np.linspace(0.0, 15.0, 1001)

    def oracle():
        s = solve(harmonic(1.0), 1.0, cfg)
        ev = np.max(np.abs(s.energies[:11] - (np.arange(11) + 0.5)))
        ex = spectral.exact_corr(s, 2, 1.0, t).values
        ref = analytic.harmonic_exact_q2(analytic.HarmonicParams(1.0, 1.0), t).values
        return [_check("oracle eigenvalues n<=10", ev, 1e-6),
                _check("oracle exact_corr vs closed form", np.max(np.abs(ex - ref)), 1e-8)]

    def harmonic_exactness():
        out = []
        for b in hp_betas:
            e = epac.epac_q2(effpot.EffectiveExpansion.harmonic(1.0, b), t).values
            ref = analytic.harmonic_exact_q2(analytic.HarmonicParams(1.0, b), t).values
            out.append(_check(f"harmonic exactness beta={b:g}", np.max(np.abs(e - ref)), 1e-12))
        return out

    def continuation():
        out = []
        for b in (1.0, 10.0):
            inputs = {"harmonic": effpot.EffectiveExpansion.harmonic(1.0, b), "potential": compute_expansion(cfg, b)}
            for label, inp in inputs.items():
                taus = np.linspace(0.0, b * inp.hbar, cfg.n_tau)
                out.append(_check(f"continuation {label} beta={b:g}", epac.continuation_check(inp, taus), 1e-9))
                per = abs(epac.imag_q2(inp, 0.0) - epac.imag_q2(inp, b * inp.hbar))
                out.append(_check(f"periodicity {label} beta={b:g}", per, 1e-10))
        return out

    def kubo2_identity():
        out = []
        for b in (1.0, 10.0):
            s = solve(harmonic(1.0), b, cfg)
            k2 = spectral.kubo2_corr(s, b, t).real
            cmd = analytic.cmd_effective_classical_op_q2(analytic.HarmonicParams(1.0, b), t).real
            out.append(_check(f"kubo2 identity beta={b:g}", np.max(np.abs(k2 - cmd)), 1e-6))
        return out

    def pimc_suite():
        est = pimc.sample_tilted_q(harmonic(1.0), 1.0, 1.0, cfg.pimc)
        z = abs(est.mean - 1.0) / est.stderr
        return [_check("pimc harmonic J=1 (sigmas)", z, 3.0, mean=est.mean, stderr=est.stderr, seed=est.seed)]

    _suite("oracle", oracle, checks)
    _suite("harmonic exactness", harmonic_exactness, checks)
    _suite("continuation", continuation, checks)
    _suite("kubo2 identity", kubo2_identity, checks)
    if cfg.pimc_suite:
        _suite("pimc", pimc_suite, checks)
    passed = all(c["passed"] for c in checks)
    w.json("validate.json", {"checks": checks, "passed": passed})
    return passed


def cmd_effpot(cfg: RunConfig, w: Writer) -> bool:
    p = cfg.potential
    rows = []
    for beta in cfg.betas:
        if cfg.backend == "pimc":
            ests = [pimc.sample_tilted_q(p, beta, j, cfg.pimc) for j in sorted(cfg.pimc_sources)]
            ti = pimc.thermo_integrate(list(zip(sorted(cfg.pimc_sources), ests)))
            w.csv(f"effpot_pimc_{_tag(beta)}.csv", {
                "J": np.array([e.J for e in ests]),
                "Q": np.array([e.mean for e in ests]),
                "Q_err": np.array([e.stderr for e in ests]),
                "w_minus_w0": np.array([r[1] for r in ti]),
                "w_err": np.array([r[2] for r in ti]),
            })
            continue
        gd, curve = effpot.effective_potential(p, beta, cfg.q_window, cfg.n_sources, **cfg.solver_kw())
        exp = effpot.extract_expansion(curve, beta, cfg.fit_window, cfg.fit_degree, p.mass, p.hbar)
        w.csv(f"effpot_{_tag(beta)}.csv", {"J": gd.sources, "w": gd.w_values, "Q": gd.q_values,
                                           "V": curve.v_values})
        rows.append(exp.to_dict())
    w.json("effpot.json", {"backend": cfg.backend, "expansions": rows})
    return True


def cmd_pimc(cfg: RunConfig, w: Writer) -> bool:
    rows = []
    for beta in cfg.betas:
        for j in cfg.pimc_sources:
            est = pimc.sample_tilted_q(cfg.potential, beta, j, cfg.pimc)
            rows.append({"beta": beta, "J": j, "mean": est.mean, "stderr": est.stderr, "acceptance": est.acceptance,
                         "P": est.P, "sweeps": est.sweeps, "seed": est.seed})
    w.json("pimc.json", {"estimates": rows})
    return True


def cmd_compare_harmonic(cfg: RunConfig, w: Writer) -> bool:
    for beta in cfg.figure_betas["fig1"]:
        cur = analytic.compare_harmonic(analytic.HarmonicParams(1.0, beta), cfg.times, cfg.rpmd_beads)
        w.csv(f"compare_harmonic_{_tag(beta)}.csv", {
            "t": cfg.times,
            "exact_canonical": cur["canonical"].real,
            "cmd_co": cur["cmd_co"].real,
            "cmd_eco": cur["cmd_eco"].real,
            "rpmd": cur["rpmd"].real,
        })
    return True


# ---------------------------------------------------------------------------
# click wiring


def _run(body, config, out, *args):
    try:
        cfg = load_config(config)
    except (ConfigError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    w = Writer(Path(out), cfg)
    w.manifest()
    try:
        passed = body(cfg, w, *args)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except EpacError as exc:
        click.echo(f"failed: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    click.echo(f"{'PASS' if passed else 'FAIL'}  outputs in {out} (config {w.hash})")
    sys.exit(EXIT_OK if passed else EXIT_FAIL)


_config_opt = click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
                           help="JSON run configuration (defaults apply when omitted).")
_out_opt = click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Effective-potential analytic continuation toolkit."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s")


@main.command("table1")
@_config_opt
@_out_opt
def table1_cmd(config, out):
    """Expansion coefficients per beta, with deviations from the reference table."""
    _run(cmd_table1, config, out)


@main.command("figures")
@_config_opt
@_out_opt
@click.option("--which", type=click.Choice(["fig1", "fig2", "fig3", "fig4", "all"]), default="all", show_default=True)
def figures_cmd(config, out, which):
    """Curve data for the comparison figures as CSV."""
    _run(cmd_figures, config, out, which)


@main.command("validate")
@_config_opt
@_out_opt
def validate_cmd(config, out):
    """Cross-module invariant suites; pass/fail JSON."""
    _run(cmd_validate, config, out)


@main.command("effpot")
@_config_opt
@_out_opt
def effpot_cmd(config, out):
    """Generating data and effective potential per beta."""
    _run(cmd_effpot, config, out)


@main.command("pimc")
@_config_opt
@_out_opt
def pimc_cmd(config, out):
    """Monte Carlo estimates of Q(J)."""
    _run(cmd_pimc, config, out)


@main.command("compare-harmonic")
@_config_opt
@_out_opt
def compare_harmonic_cmd(config, out):
    """Canonical, CMD and RPMD harmonic curves."""
    _run(cmd_compare_harmonic, config, out)


if __name__ == "__main__":  # pragma: no cover
    main()
