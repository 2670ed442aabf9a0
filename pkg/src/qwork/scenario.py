"""Turn a ScenarioConfig into model objects and run the end-to-end analyses."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .classical import Delta, Gaussian, PhasePoint, classical_work_distribution, ramp_oscillator
from .classicality import ClassicalityReport, classicality_report, estimate_epsilon_a, estimate_epsilon_b
from .config import ScenarioConfig, config_hash, to_complex_matrix
from .dynamics import (
    Constant,
    LinearRampOscillator,
    PiecewiseTable,
    Quench,
    TimeDependentHamiltonian,
    TwoLevelDrive,
    heisenberg_hamiltonian,
    propagate,
)
from .errors import ConfigError, DomainError
from .oscillator import (
    OscillatorParams,
    classical_work_closed,
    coherent_ket_at,
    energy_deltas,
    quadratic_moments,
    work_operator_matrix,
)
from .quantum import (
    DensityMatrix,
    FockAlgebra,
    coherent_ket,
    fock_state,
)
from .work import (
    CriteriaReport,
    WorkDistribution,
    apply_povm,
    binned_l1,
    criteria_report,
    max_coherence_along_path,
    obs_povm,
    tpm_povm,
    work_operator,
    l1_distance,
)

log = logging.getLogger("qwork")


def algebra_of(cfg: ScenarioConfig) -> FockAlgebra:
    s = cfg.system
    return FockAlgebra(s.dim, s.hbar_eff, s.mass, s.omega0)


def build_hamiltonian(cfg: ScenarioConfig) -> TimeDependentHamiltonian:
    h = cfg.hamiltonian
    tau = cfg.protocol.tau
    if h.form == "constant":
        return Constant(to_complex_matrix(h.h), tau)
    if h.form == "quench":
        return Quench(to_complex_matrix(h.h0), to_complex_matrix(h.h1), h.switch_time, 0.0 if tau is None else tau)
    if h.form == "linear_ramp_oscillator":
        return LinearRampOscillator(algebra_of(cfg), h.omega1, tau)
    if h.form == "piecewise_table":
        spec = PiecewiseTable(h.times, [to_complex_matrix(m) for m in h.matrices])
    else:
        spec = TwoLevelDrive(
            to_complex_matrix(h.base), to_complex_matrix(h.drive), h.envelope_times, h.envelope_values
        )
    if tau is not None and tau != spec.tau:
        raise ConfigError(f"field 'protocol.tau': {tau} disagrees with the tabulated end time {spec.tau}")
    return spec


def build_state(spec, cfg: ScenarioConfig) -> DensityMatrix:
    d = cfg.system.dim
    if spec is None:
        raise ConfigError("field 'state': this command needs an initial state")
    if spec.kind == "fock":
        return fock_state(spec.n, d)
    if spec.kind == "ket":
        amps = [complex(a[0], a[1]) if isinstance(a, (tuple, list)) else complex(a) for a in spec.amplitudes]
        return DensityMatrix.from_ket(amps)
    if spec.kind == "matrix":
        return DensityMatrix(to_complex_matrix(spec.matrix))
    if spec.kind == "coherent":
        return DensityMatrix.from_ket(coherent_ket(complex(*spec.alpha), d))
    if spec.kind == "coherent_phase_point":
        alg = algebra_of(cfg)
        return DensityMatrix.from_ket(coherent_ket(alg.alpha_for(spec.x0, spec.p0), d))
    total = sum(c.weight * build_state(c.state, cfg).matrix for c in spec.components)
    return DensityMatrix(total)


def build_phase_distribution(spec):
    if spec.form == "delta":
        return Delta(PhasePoint(spec.x0, spec.p0))
    return Gaussian(PhasePoint(spec.x0, spec.p0), spec.sigma_x, spec.sigma_p)


def oscillator_params(cfg: ScenarioConfig, hbar_eff: float | None = None) -> OscillatorParams:
    h = cfg.hamiltonian
    if h.form != "linear_ramp_oscillator":
        raise ConfigError("field 'hamiltonian.form': this command needs linear_ramp_oscillator")
    s = cfg.system
    return OscillatorParams(s.mass, s.omega0, h.omega1, cfg.protocol.tau, s.hbar_eff if hbar_eff is None else hbar_eff)


@dataclass
class RunReport:
    distributions: dict[str, WorkDistribution]
    criteria: dict[str, CriteriaReport]
    distances: dict[str, float]
    provenance: dict
    classicality: ClassicalityReport | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "provenance": self.provenance,
            "distributions": {
                k: {"mean": d.mean(), "atoms": len(d.values), "provenance": d.provenance}
                for k, d in self.distributions.items()
            },
            "criteria": {
                k: {
                    "completeness_residual": c.completeness_residual,
                    "min_effect_eigenvalue": c.min_effect_eigenvalue,
                    "first_law_operator_residual": c.first_law_operator_residual,
                    "first_law_state_gap": c.first_law_state_gap,
                    "degenerate_h0": c.degenerate_h0,
                }
                for k, c in self.criteria.items()
            },
            "distances": self.distances,
        }
        if self.classicality is not None:
            r = self.classicality
            out["classicality"] = {
                "epsilon_a": r.epsilon_a,
                "epsilon_b": r.epsilon_b,
                "epsilon_max": r.epsilon_max,
                "max_order_checked": r.max_order_checked,
                "max_degree_checked": r.max_degree_checked,
                "skipped_terms": [list(s) for s in r.skipped_terms],
            }
        out.update(self.extra)
        return out


def provenance(cfg: ScenarioConfig, **certs) -> dict:
    return {"config_hash": config_hash(cfg), "seed": cfg.analysis.seed, "tool_version": __version__, **certs}


def run_quench(cfg: ScenarioConfig) -> RunReport:
    """TPM/OBS distributions, criteria and distances for the configured scenario."""
    hspec = build_hamiltonian(cfg)
    rho = build_state(cfg.state, cfg)
    hbar = cfg.system.hbar_eff
    prop = propagate(hspec, hspec.tau, cfg.protocol.steps, hbar, monitor=rho)
    h0 = hspec.initial()
    hh = heisenberg_hamiltonian(hspec, hspec.tau, prop.U)
    a = cfg.analysis
    dists, crit = {}, {}
    if "TPM" in a.povms:
        povm = tpm_povm(h0, hspec.final(), prop.U, a.merge_tol)
        dists["TPM"] = apply_povm(povm, rho)
        crit["TPM"] = criteria_report(povm, h0, hh.matrix, [rho])
    if "OBS" in a.povms:
        povm = obs_povm(work_operator(h0, hh), a.merge_tol)
        dists["OBS"] = apply_povm(povm, rho)
        crit["OBS"] = criteria_report(povm, h0, hh.matrix, [rho])
    distances = {}
    if "TPM" in dists and "OBS" in dists:
        distances["l1(TPM,OBS)"] = l1_distance(dists["TPM"], dists["OBS"], a.align_tol)
    if a.classical is not None and cfg.hamiltonian.form == "linear_ramp_oscillator":
        p = oscillator_params(cfg)
        spec = ramp_oscillator(p.mass, p.omega0, p.omega1, p.tau)
        cl = classical_work_distribution(spec, build_phase_distribution(a.classical), a.n_samples, a.seed, a.bin_width)
        dists["Classical"] = cl
        if "OBS" in dists:
            width = a.bin_width or max(float(np.ptp(cl.values)) / 512, 1e-12)
            distances["l1_binned(OBS,Classical)"] = binned_l1(dists["OBS"], cl, width)
    certs = {
        "steps": prop.steps,
        "unitarity_residual": prop.unitarity_residual,
        "step_halving_gap": prop.richardson_gap,
    }
    return RunReport(dists, crit, distances, provenance(cfg, **certs))


def run_classical(cfg: ScenarioConfig) -> RunReport:
    a = cfg.analysis
    if a.classical is None:
        raise ConfigError("field 'analysis.classical': a phase-space distribution is required")
    p = oscillator_params(cfg)
    spec = ramp_oscillator(p.mass, p.omega0, p.omega1, p.tau)
    steps = cfg.protocol.steps or 2000
    dist = classical_work_distribution(spec, build_phase_distribution(a.classical), a.n_samples, a.seed, a.bin_width, steps)
    return RunReport({"Classical": dist}, {}, {}, provenance(cfg, rk4_steps=steps))


def run_classicality(cfg: ScenarioConfig) -> RunReport:
    a = cfg.analysis
    alg = algebra_of(cfg)
    rho = build_state(cfg.state, cfg)
    dist = build_phase_distribution(a.classical) if a.classical is not None else None
    rep = classicality_report(rho, alg, dist, a.max_order, a.max_degree)
    return RunReport({}, {}, {}, provenance(cfg), classicality=rep)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def result1_point(hspec: TwoLevelDrive, rho: DensityMatrix, amplitude: float, time_points: int, hbar: float, steps, align_tol):
    """(epsilon1, l1(TPM, OBS)) for one drive amplitude."""
    hs = hspec.scaled(amplitude)
    grid = np.linspace(0.0, hs.tau, time_points)
    eps1 = max_coherence_along_path(hs, rho, grid, hbar)
    u = propagate(hs, hs.tau, steps, hbar, certify=False).U
    h0 = hs.initial()
    hh = heisenberg_hamiltonian(hs, hs.tau, u)
    tpm = apply_povm(tpm_povm(h0, hs.final(), u), rho)
    obs = apply_povm(obs_povm(work_operator(h0, hh)), rho)
    return eps1, l1_distance(tpm, obs, align_tol)


def sweep_result1(cfg: ScenarioConfig, threads: int = 1) -> list[dict]:
    sw = cfg.sweep
    hspec = build_hamiltonian(cfg)
    if not isinstance(hspec, TwoLevelDrive):
        raise ConfigError("field 'hamiltonian.form': result1 sweeps need two_level_drive")
    rho = build_state(cfg.state, cfg)
    amps = sorted(sw.amplitudes)

    def one(amp):
        return result1_point(hspec, rho, amp, sw.time_points, cfg.system.hbar_eff, cfg.protocol.steps, cfg.analysis.align_tol)

    rows = []
    for eps1, l1 in _map(one, amps, threads):
        ratio = l1 / eps1 if eps1 > 0 else float("inf")
        rows.append({"epsilon1": eps1, "l1_tpm_obs": l1, "ratio": ratio})
    rows.sort(key=lambda r: r["epsilon1"])
    return rows


def result2_point(params: OscillatorParams, x0: float, p0: float, max_order=8, max_degree=4, dense_dim_limit=2500, bin_fraction=0.05) -> dict:
    """Classicality and OBS-versus-classical diagnostics for one coherent state."""
    ket, alg = coherent_ket_at(params, x0, p0)
    point = Delta(PhasePoint(x0, p0))
    eps_a, _ = estimate_epsilon_a(ket, alg, point, max_order)
    eps_b, _ = estimate_epsilon_b(ket, alg, max_degree)
    w_cl = classical_work_closed(params, x0, p0)
    x2, p2, xp = quadratic_moments(alg, ket)
    dE, dF, dG = energy_deltas(params)
    mean_obs = dE * x2 + dF * p2 + dG * xp
    l1 = float("nan")
    if alg.dim <= dense_dim_limit:
        rho = DensityMatrix.from_ket(ket)
        obs = apply_povm(obs_povm(work_operator_matrix(params, alg.dim)), rho)
        cl = WorkDistribution(np.array([w_cl]), np.array([1.0]), "Classical")
        width = bin_fraction * abs(w_cl)
        l1 = binned_l1(obs, cl, width, origin=w_cl - width / 2)
    return {
        "hbar_eff": params.hbar_eff,
        "dim": alg.dim,
        "epsilon_a": eps_a,
        "epsilon_b": eps_b,
        "epsilon_max": max(eps_a, eps_b),
        "l1_obs_cl": l1,
        "mean_gap": abs(mean_obs - w_cl) / abs(w_cl),
    }


def sweep_result2(cfg: ScenarioConfig, threads: int = 1) -> list[dict]:
    sw = cfg.sweep
    base = oscillator_params(cfg)
    hbars = sorted(sw.hbar_values, reverse=True)
    a = cfg.analysis

    def one(h):
        p = OscillatorParams(base.mass, base.omega0, base.omega1, base.tau, h)
        return result2_point(p, sw.x0, sw.p0, a.max_order, a.max_degree, sw.dense_dim_limit, sw.bin_fraction)

    return _map(one, hbars, threads)


def run_sweep(kind: str, cfg: ScenarioConfig, threads: int = 1) -> list[dict]:
    if cfg.sweep is None:
        raise ConfigError("field 'sweep': missing sweep section")
    if cfg.sweep.kind != kind:
        raise ConfigError(f"field 'sweep.kind': config describes {cfg.sweep.kind!r}, command asked for {kind!r}")
    if kind == "result1":
        return sweep_result1(cfg, threads)
    if kind == "result2":
        return sweep_result2(cfg, threads)
    raise DomainError(f"unknown sweep {kind!r}")
