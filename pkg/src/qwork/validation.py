"""Seeded randomized invariant suites run by ``qwork validate``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classical import flow, free_particle, monodromy, ramp_oscillator, static_oscillator
from .classicality import weyl_expansion_residual
from .dynamics import PiecewiseTable, heisenberg_hamiltonian, propagate, unitarity_residual
from .numkit import airy, hermitian_eig, max_abs, unitary_exp
from .oscillator import OscillatorParams, abcd
from .quantum import (
    DensityMatrix,
    FockAlgebra,
    coherent_state,
    dephase,
    l1_coherence,
    random_density_matrix,
    random_hermitian,
)
from .work import (
    WorkDistribution,
    apply_povm,
    characteristic_function,
    criteria_report,
    default_merge_tol,
    obs_povm,
    tpm_povm,
    work_operator,
)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    checked: int
    worst: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "worst": self.worst,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class Context:
    rng: np.random.Generator
    count: int
    max_dim: int
    inject_nonunitary: bool = False

    def dim(self) -> int:
        return int(self.rng.integers(2, self.max_dim + 1))


def _scenario(ctx: Context, dim: int | None = None):
    d = ctx.dim() if dim is None else dim
    h0 = random_hermitian(d, ctx.rng)
    h1 = random_hermitian(d, ctx.rng)
    table = PiecewiseTable([0.0, 0.5, 1.0], [h0, random_hermitian(d, ctx.rng), h1])
    u = propagate(table, 1.0, 50, certify=False).U
    return table, u


def suite_eigendecomposition(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        h = random_hermitian(ctx.dim(), ctx.rng)
        worst = max(worst, max_abs(hermitian_eig(h).reconstruct() - h) / max(1.0, max_abs(h)))
    return worst, 1e-12


def suite_unitary_exp(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        u = unitary_exp(random_hermitian(ctx.dim(), ctx.rng), float(ctx.rng.uniform(0, 5)))
        worst = max(worst, unitarity_residual(u))
    return worst, 1e-12


def suite_propagator_unitarity(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        _, u = _scenario(ctx)
        if ctx.inject_nonunitary:
            u = 1.01 * u
        worst = max(worst, unitarity_residual(u))
    return worst, 1e-8


def suite_density_matrix(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        rho = random_density_matrix(ctx.dim(), ctx.rng)
        lam = np.linalg.eigvalsh(rho.matrix)
        worst = max(worst, abs(np.trace(rho.matrix).real - 1), max(0.0, -lam[0]))
    return worst, 1e-10


def suite_dephasing(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        d = ctx.dim()
        h = random_hermitian(d, ctx.rng)
        rho = random_density_matrix(d, ctx.rng)
        once = dephase(rho, h)
        twice = dephase(once, h)
        worst = max(worst, max_abs(once.matrix - twice.matrix), l1_coherence(once, h))
    return worst, 1e-10


def suite_obs_povm(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        table, u = _scenario(ctx)
        hh = heisenberg_hamiltonian(table, 1.0, u)
        p = obs_povm(work_operator(table.initial(), hh))
        worst = max(worst, p.completeness_residual(), max(0.0, -p.min_effect_eigenvalue()))
    return worst, 1e-8


def suite_tpm_povm(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        table, u = _scenario(ctx)
        p = tpm_povm(table.initial(), table.final(), u)
        worst = max(worst, p.completeness_residual(), max(0.0, -p.min_effect_eigenvalue()))
    return worst, 1e-8


def suite_obs_first_law(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        table, u = _scenario(ctx)
        h0 = table.initial()
        hh = heisenberg_hamiltonian(table, 1.0, u)
        w = work_operator(h0, hh)
        p = obs_povm(w)
        rep = criteria_report(p, h0, hh.matrix, [random_density_matrix(h0.shape[0], ctx.rng)])
        slack = 1e-8 + default_merge_tol(max_abs(w.matrix))
        worst = max(worst, rep.first_law_operator_residual / slack, rep.first_law_state_gap / 1e-9)
    return worst, 1.0


def suite_tpm_incoherent_first_law(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        table, u = _scenario(ctx)
        h0 = table.initial()
        rho = dephase(random_density_matrix(h0.shape[0], ctx.rng), h0)
        hh = heisenberg_hamiltonian(table, 1.0, u)
        rep = criteria_report(tpm_povm(h0, table.final(), u), h0, hh.matrix, [rho])
        worst = max(worst, rep.first_law_state_gap)
    return worst, 1e-9


def suite_tpm_linearity(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        table, u = _scenario(ctx)
        d = table.dim
        p = tpm_povm(table.initial(), table.final(), u)
        r1, r2 = random_density_matrix(d, ctx.rng), random_density_matrix(d, ctx.rng)
        lam = float(ctx.rng.uniform())
        mix = DensityMatrix(lam * r1.matrix + (1 - lam) * r2.matrix)
        lhs = apply_povm(p, mix, drop_below=0).probs
        rhs = lam * apply_povm(p, r1, drop_below=0).probs + (1 - lam) * apply_povm(p, r2, drop_below=0).probs
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst, 1e-10


def suite_characteristic_function(ctx):
    worst = 0.0
    h = 1e-6
    for _ in range(ctx.count):
        k = int(ctx.rng.integers(1, 12))
        w = np.sort(ctx.rng.uniform(-3, 3, k))
        w = np.unique(w)
        p = ctx.rng.uniform(size=w.size)
        dist = WorkDistribution(w, p / p.sum(), "TPM")
        chi0 = characteristic_function(dist, 0.0)
        d1 = (characteristic_function(dist, h) - characteristic_function(dist, -h)) / (2 * h)
        mean = dist.mean()
        worst = max(worst, abs(chi0 - 1) / 1e-12, abs(d1 - 1j * mean) / max(abs(mean), 1e-3) / 1e-6)
    return worst, 1.0


def suite_airy_wronskian(ctx):
    worst = 0.0
    for z in ctx.rng.uniform(-10, 10, ctx.count):
        a = airy(float(z))
        worst = max(worst, abs(a.ai * a.bip - a.aip * a.bi - 1 / math.pi) * math.pi)
    return worst, 1e-8


def suite_oscillator_symplectic(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        w0, w1 = ctx.rng.uniform(0.5, 2.0, 2)
        if abs(w1 - w0) < 1e-3:
            w1 = w0 + 0.5
        params = OscillatorParams(float(ctx.rng.uniform(0.5, 2)), float(w0), float(w1), 1.0)
        t = float(ctx.rng.uniform(0, 1))
        worst = max(worst, abs(abcd(params, t).det - 1))
    return worst, 1e-10


def suite_classical_energy(ctx):
    worst = 0.0
    specs = [free_particle(), static_oscillator(1.0, 1.3)]
    for k in range(ctx.count):
        spec = specs[k % 2]
        x0, p0 = ctx.rng.uniform(-2, 2, 2)
        x, p = flow(spec, x0, p0, spec.tau, 2000)
        e0, e1 = spec.h(x0, p0, 0.0), spec.h(x, p, spec.tau)
        worst = max(worst, abs(e1 - e0) / max(abs(e0), 1e-12))
    return worst, 1e-8


def suite_liouville(ctx):
    worst = 0.0
    for _ in range(max(1, ctx.count // 10)):
        w1 = float(ctx.rng.uniform(1.5, 3.5))
        worst = max(worst, abs(np.linalg.det(monodromy(ramp_oscillator(1.0, 1.0, w1, 1.0))) - 1))
    return worst, 1e-7


def suite_fock_commutator(ctx):
    worst = 0.0
    for _ in range(ctx.count):
        d = int(ctx.rng.integers(4, max(5, 4 * ctx.max_dim)))
        alg = FockAlgebra(d, float(ctx.rng.uniform(0.1, 2)))
        worst = max(worst, alg.commutator_residual() / alg.hbar_eff)
    return worst, 1e-10


def suite_weyl_expansion(ctx):
    worst = 0.0
    for _ in range(max(1, ctx.count // 10)):
        alg = FockAlgebra(80, float(ctx.rng.uniform(0.2, 1.5)))
        alpha = complex(*ctx.rng.uniform(-2, 2, 2))
        rho = coherent_state(alpha, alg)
        n, m = (int(v) for v in ctx.rng.integers(0, 4, 2))
        worst = max(worst, weyl_expansion_residual(n, m, alg, rho))
    return worst, 1e-7


SUITES: dict[str, Callable[[Context], tuple[float, float]]] = {
    "eigendecomposition_reconstruction": suite_eigendecomposition,
    "unitary_exponential": suite_unitary_exp,
    "propagator_unitarity": suite_propagator_unitarity,
    "density_matrix_validity": suite_density_matrix,
    "dephasing_idempotent_incoherent": suite_dephasing,
    "obs_povm_validity": suite_obs_povm,
    "tpm_povm_validity": suite_tpm_povm,
    "obs_first_law": suite_obs_first_law,
    "tpm_first_law_incoherent": suite_tpm_incoherent_first_law,
    "tpm_linearity": suite_tpm_linearity,
    "characteristic_function_moments": suite_characteristic_function,
    "airy_wronskian": suite_airy_wronskian,
    "oscillator_symplectic": suite_oscillator_symplectic,
    "classical_energy_conservation": suite_classical_energy,
    "classical_liouville": suite_liouville,
    "fock_commutator": suite_fock_commutator,
    "weyl_reordering_expansion": suite_weyl_expansion,
}


def run_suites(seed: int = 0, count: int = 20, max_dim: int = 8, inject_nonunitary: bool = False) -> dict:
    """Run every suite with its own child seed; returns a JSON-ready summary without timings."""
    results, errors = [], {}
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    for (name, fn), child in zip(SUITES.items(), children):
        ctx = Context(np.random.default_rng(child), count, max_dim, inject_nonunitary)
        try:
            worst, tol = fn(ctx)
            results.append(SuiteResult(name, bool(worst <= tol), count, float(worst), tol))
        except Exception as exc:  # a raised invariant error counts as a failed suite
            results.append(SuiteResult(name, False, count, float("inf"), 0.0))
            errors[name] = f"{type(exc).__name__}: {exc}"
    failed = [r.name for r in results if not r.passed]
    return {
        "seed": seed,
        "count": count,
        "max_dim": max_dim,
        "n_suites": len(results),
        "suites": [r.to_dict() for r in results],
        "failed": failed,
        "errors": errors,
        "passed": not failed,
    }
