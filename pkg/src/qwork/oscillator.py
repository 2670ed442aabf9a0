"""Closed-form linear-ramp oscillator: Airy flow coefficients, energy coefficients and mean works."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .numkit import airy
from .quantum import FockAlgebra, HermitianOperator, coherent_ket, dim_for_coherent

FLAG_ZERO_WORK = "w_cl_zero"


@dataclass(frozen=True)
class OscillatorParams:
    """H(t) = P^2/2m + m w^2(t) X^2 / 2, w^2 ramped linearly from omega0^2 to omega1^2 over tau."""

    mass: float = 1.0
    omega0: float = 1.0
    omega1: float = 3.0
    tau: float = 1.0
    hbar_eff: float = 1.0

    def __post_init__(self):
        for name in ("mass", "omega0", "omega1", "tau", "hbar_eff"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v}")
        if self.omega1 == self.omega0:
            raise DomainError("omega1 must differ from omega0")

    @property
    def tau_prime(self) -> float:
        return float(np.cbrt(self.tau / (self.omega1**2 - self.omega0**2)))

    def algebra(self, dim: int) -> FockAlgebra:
        return FockAlgebra(dim, self.hbar_eff, self.mass, self.omega0)


@dataclass(frozen=True)
class LinearFlow:
    """X_h(t) = A X + B P, P_h(t) = C X + D P."""

    t: float
    A: float
    B: float
    C: float
    D: float

    @property
    def det(self) -> float:
        return self.A * self.D - self.B * self.C

    def apply(self, x0, p0):
        return self.A * x0 + self.B * p0, self.C * x0 + self.D * p0


@dataclass(frozen=True)
class EnergyCoeffs:
    """H_h(t) = E X^2 + F P^2 + G {X, P}."""

    t: float
    E: float
    F: float
    G: float

    def quadratic_form(self, x0, p0):
        return self.E * x0**2 + self.F * p0**2 + 2 * self.G * x0 * p0


def _check_time(params: OscillatorParams, t: float) -> float:
    t = float(t)
    if not 0 <= t <= params.tau:
        raise DomainError(f"t={t} outside [0, {params.tau}]")
    return t


def omega_sq(params: OscillatorParams, t: float) -> float:
    t = _check_time(params, t)
    return params.omega0**2 + (params.omega1**2 - params.omega0**2) * t / params.tau


def abcd(params: OscillatorParams, t: float) -> LinearFlow:
    """Flow coefficients from Airy functions at z(t) = -w^2(t) tau'^2.

    C and D are m times the time derivatives of A and B; dz/dt = -1/tau'.
    """
    tp = params.tau_prime
    m = params.mass
    a0, b0, a0p, b0p = airy(-params.omega0**2 * tp**2)
    ai, bi, aip, bip = airy(-omega_sq(params, t) * tp**2)
    den = a0p * b0 - a0 * b0p
    A = (a0p * bi - b0p * ai) / den
    B = tp / m * (a0 * bi - b0 * ai) / den
    C = m / tp * (b0p * aip - a0p * bip) / den
    D = (b0 * aip - a0 * bip) / den
    return LinearFlow(float(t), A, B, C, D)


def efg(params: OscillatorParams, t: float) -> EnergyCoeffs:
    f = abcd(params, t)
    m = params.mass
    w2 = omega_sq(params, t)
    E = 0.5 * m * w2 * f.A**2 + f.C**2 / (2 * m)
    F = 0.5 * m * w2 * f.B**2 + f.D**2 / (2 * m)
    G = 0.5 * m * w2 * f.A * f.B + f.C * f.D / (2 * m)
    return EnergyCoeffs(float(t), E, F, G)


def energy_deltas(params: OscillatorParams, t1: float = 0.0, t2: float | None = None):
    """(E, F, G) at t2 minus their values at t1."""
    if t2 is None:
        t2 = params.tau
    if not _check_time(params, t1) <= _check_time(params, t2):
        raise DomainError("need t1 <= t2")
    a, b = efg(params, t1), efg(params, t2)
    return b.E - a.E, b.F - a.F, b.G - a.G


def classical_work_closed(params: OscillatorParams, x0, p0, t1: float = 0.0, t2: float | None = None):
    dE, dF, dG = energy_deltas(params, t1, t2)
    return dE * x0**2 + dF * p0**2 + 2 * dG * x0 * p0


def obs_mean_closed(params: OscillatorParams, x0, p0, t1: float = 0.0, t2: float | None = None):
    """Classical-limit OBS mean work; coincides with the classical work."""
    return classical_work_closed(params, x0, p0, t1, t2)


def tpm_mean_closed(params: OscillatorParams, x0, p0, t1: float = 0.0, t2: float | None = None):
    """Classical-limit TPM mean work: the {X,P} term averages to zero on the dephased state."""
    dE, dF, _ = energy_deltas(params, t1, t2)
    mw = params.mass * params.omega0
    return dE * (x0**2 / 2 + p0**2 / (2 * mw**2)) + dF * (mw**2 * x0**2 / 2 + p0**2 / 2)


def zero_point_offset(params: OscillatorParams, t1: float = 0.0, t2: float | None = None) -> float:
    """dE <dX^2> + dF <dP^2> for a coherent state of the initial trap."""
    dE, dF, _ = energy_deltas(params, t1, t2)
    mw = params.mass * params.omega0
    return dE * params.hbar_eff / (2 * mw) + dF * params.hbar_eff * mw / 2


def obs_mean_coherent_exact(params: OscillatorParams, x0, p0, t1: float = 0.0, t2: float | None = None):
    """Exact <W> on the coherent state centred at (x0, p0): classical value plus zero-point offset."""
    return classical_work_closed(params, x0, p0, t1, t2) + zero_point_offset(params, t1, t2)


def tpm_mean_coherent_exact(params: OscillatorParams, x0, p0, t1: float = 0.0, t2: float | None = None):
    """Exact TPM mean on the coherent state; the offset matches the OBS one since <{X,P}> only enters OBS."""
    return tpm_mean_closed(params, x0, p0, t1, t2) + zero_point_offset(params, t1, t2)


def heisenberg_hamiltonian_matrix(params: OscillatorParams, t: float, dim: int) -> HermitianOperator:
    if dim < 40:
        raise DomainError("Heisenberg Hamiltonian matrix needs dim >= 40")
    c = efg(params, t)
    alg = params.algebra(dim)
    return HermitianOperator(c.E * alg.X2 + c.F * alg.P2 + c.G * alg.XP_anti)


def work_operator_matrix(params: OscillatorParams, dim: int, t1: float = 0.0, t2: float | None = None):
    """(E2-E1) X^2 + (F2-F1) P^2 + (G2-G1) {X,P} in the Fock basis."""
    dE, dF, dG = energy_deltas(params, t1, t2)
    alg = params.algebra(dim)
    return HermitianOperator(dE * alg.X2 + dF * alg.P2 + dG * alg.XP_anti, "work")


def coherent_ket_at(params: OscillatorParams, x0: float, p0: float, headroom: int = 16):
    """Coherent ket centred at (x0, p0) on a truncation sized for it, with its algebra."""
    probe = params.algebra(2)
    alpha = probe.alpha_for(x0, p0)
    dim = dim_for_coherent(alpha, headroom=headroom)
    alg = params.algebra(dim)
    return coherent_ket(alpha, dim), alg


def quadratic_moments(algebra: FockAlgebra, ket: np.ndarray) -> tuple[float, float, float]:
    """<X^2>, <P^2>, <{X,P}> of a ket, matrix-free."""
    xv = algebra.apply_x(ket)
    pv = algebra.apply_p(ket)
    return float(np.vdot(xv, xv).real), float(np.vdot(pv, pv).real), float(2 * np.vdot(xv, pv).real)


def obs_mean_coherent_numeric(params: OscillatorParams, x0: float, p0: float, t1: float = 0.0, t2=None) -> float:
    """Tr[W rho] on the truncated coherent ket; this is the OBS first moment."""
    ket, alg = coherent_ket_at(params, x0, p0)
    dE, dF, dG = energy_deltas(params, t1, t2)
    x2, p2, xp = quadratic_moments(alg, ket)
    return dE * x2 + dF * p2 + dG * xp


@dataclass(frozen=True)
class GridRow:
    x0: float
    p0: float
    w_cl: float
    w_tpm: float
    rel_diff: float
    flag: str = ""


def default_grid(n: int = 11) -> np.ndarray:
    return np.linspace(1.0, 2.0, n)


def figure1_grid(
    params: OscillatorParams | None = None,
    x_grid: Sequence[float] | None = None,
    p_grid: Sequence[float] | None = None,
    t1: float = 0.0,
    t2: float | None = None,
) -> list[GridRow]:
    """Relative difference (W_CL - <W>_TPM) / W_CL over a grid, x-major order.

    Rows with vanishing classical work are kept and flagged with rel_diff = nan.
    """
    params = OscillatorParams() if params is None else params
    xs = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    ps = default_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    dE, dF, dG = energy_deltas(params, t1, t2)
    mw = params.mass * params.omega0
    rows = []
    for x0 in xs:
        for p0 in ps:
            w_cl = dE * x0**2 + dF * p0**2 + 2 * dG * x0 * p0
            w_tpm = dE * (x0**2 / 2 + p0**2 / (2 * mw**2)) + dF * (mw**2 * x0**2 / 2 + p0**2 / 2)
            scale = max(abs(dE) * x0**2, abs(dF) * p0**2, abs(dG * x0 * p0), 1e-300)
            if abs(w_cl) <= 1e-14 * scale or w_cl == 0:
                rows.append(GridRow(float(x0), float(p0), float(w_cl), float(w_tpm), float("nan"), FLAG_ZERO_WORK))
            else:
                rows.append(GridRow(float(x0), float(p0), float(w_cl), float(w_tpm), float((w_cl - w_tpm) / w_cl)))
    return rows
