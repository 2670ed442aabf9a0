"""Time-dependent Hamiltonians, the propagator U_t and the Heisenberg-picture Hamiltonian."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, NonUnitary, TruncationLeakage
from .numkit import check_hermitian, max_abs, unitary_exp
from .quantum import DensityMatrix, FockAlgebra, HermitianOperator

UNITARITY_TOL = 1e-8
LEAKAGE_TOL = 1e-8
MIN_STEPS, MAX_STEPS = 100, 20000


class TimeDependentHamiltonian:
    """Base class for t -> H(t) on [0, tau].

    ``initial()`` and ``final()`` are the Hamiltonians measured at the two ends
    of the protocol; for a sudden quench they differ even when tau == 0.
    """

    tau: float

    @property
    def dim(self) -> int:
        return self.initial().shape[0]

    def at(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def initial(self) -> np.ndarray:
        return self.at(0.0)

    def final(self) -> np.ndarray:
        return self.at(self.tau)

    def H(self, t: float) -> np.ndarray:
        if t <= 0:
            return self.initial()
        if t >= self.tau:
            return self.final()
        return self.at(t)

    def segments(self) -> list[tuple[float, float, np.ndarray | None]]:
        """Pieces of [0, tau]; a matrix marks a piece on which H is constant."""
        return [(0.0, self.tau, None)]

    def spectral_radius(self, samples: int = 5) -> float:
        ts = np.linspace(0, self.tau, samples) if self.tau > 0 else [0.0]
        mats = [self.H(t) for t in ts] + [self.initial(), self.final()]
        return max(float(np.max(np.abs(np.linalg.eigvalsh(m)))) for m in mats)

    def _check_tau(self, allow_zero: bool = False):
        if not (self.tau > 0 or (allow_zero and self.tau == 0)):
            raise DomainError(f"protocol duration must be positive, got {self.tau}")


@dataclass(frozen=True, eq=False)
class Constant(TimeDependentHamiltonian):
    h: np.ndarray
    tau: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "h", check_hermitian(self.h))
        self._check_tau()

    def at(self, t):
        return self.h

    def segments(self):
        return [(0.0, self.tau, self.h)]


@dataclass(frozen=True, eq=False)
class Quench(TimeDependentHamiltonian):
    """H0 before ``switch_time``, H1 from then on; tau == 0 is a sudden quench (U = I)."""

    h0: np.ndarray
    h1: np.ndarray
    switch_time: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h0", check_hermitian(self.h0))
        object.__setattr__(self, "h1", check_hermitian(self.h1))
        if self.h0.shape != self.h1.shape:
            raise DimensionMismatch("quench Hamiltonians differ in shape")
        self._check_tau(allow_zero=True)
        if not 0 <= self.switch_time <= self.tau:
            raise DomainError("switch_time must lie in [0, tau]")

    def at(self, t):
        return self.h0 if t < self.switch_time else self.h1

    def initial(self):
        return self.h0

    def final(self):
        return self.h1

    def segments(self):
        segs = []
        if self.switch_time > 0:
            segs.append((0.0, self.switch_time, self.h0))
        if self.tau > self.switch_time:
            segs.append((self.switch_time, self.tau, self.h1))
        return segs


@dataclass(frozen=True, eq=False)
class LinearRampOscillator(TimeDependentHamiltonian):
    """H(t) = P^2/2m + m w^2(t) X^2/2 with w^2 ramped linearly from omega0^2 to omega1^2."""

    algebra: FockAlgebra
    omega1: float
    tau: float = 1.0

    def __post_init__(self):
        self._check_tau()
        if not self.omega1 > 0:
            raise DomainError("omega1 must be positive")

    def omega_sq(self, t: float) -> float:
        w0 = self.algebra.omega0
        return w0**2 + (self.omega1**2 - w0**2) * t / self.tau

    def at(self, t):
        alg = self.algebra
        return alg.P2 / (2 * alg.mass) + 0.5 * alg.mass * self.omega_sq(t) * alg.X2


@dataclass(frozen=True, eq=False)
class PiecewiseTable(TimeDependentHamiltonian):
    """Linear interpolation between tabulated Hamiltonians; tau is the last time."""

    times: Sequence[float]
    matrices: Sequence[np.ndarray]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.size < 1 or times.size != len(self.matrices):
            raise DomainError("times and matrices must be non-empty and equally long")
        if times[0] != 0 or np.any(np.diff(times) <= 0):
            raise DomainError("table times must start at 0 and increase strictly")
        mats = np.array([check_hermitian(m) for m in self.matrices])
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "tau", float(times[-1]))
        self._check_tau(allow_zero=times.size == 1)

    def at(self, t):
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 1))
        if k == len(self.times) - 1:
            return self.matrices[k]
        s = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return (1 - s) * self.matrices[k] + s * self.matrices[k + 1]


@dataclass(frozen=True, eq=False)
class TwoLevelDrive(TimeDependentHamiltonian):
    """H(t) = base + envelope(t) * drive, envelope linearly interpolated from samples."""

    base: np.ndarray
    drive: np.ndarray
    envelope_times: Sequence[float]
    envelope_values: Sequence[float]

    def __post_init__(self):
        object.__setattr__(self, "base", check_hermitian(self.base))
        object.__setattr__(self, "drive", check_hermitian(self.drive))
        if self.base.shape != self.drive.shape:
            raise DimensionMismatch("base and drive differ in shape")
        ts = np.asarray(self.envelope_times, dtype=float)
        vs = np.asarray(self.envelope_values, dtype=float)
        if ts.size < 2 or ts.size != vs.size or ts[0] != 0 or np.any(np.diff(ts) <= 0):
            raise DomainError("envelope samples must start at t=0 and increase strictly")
        object.__setattr__(self, "envelope_times", ts)
        object.__setattr__(self, "envelope_values", vs)
        object.__setattr__(self, "tau", float(ts[-1]))

    def envelope(self, t: float) -> float:
        return float(np.interp(t, self.envelope_times, self.envelope_values))

    def at(self, t):
        return self.base + self.envelope(t) * self.drive

    def scaled(self, amplitude: float) -> "TwoLevelDrive":
        return TwoLevelDrive(self.base, amplitude * self.drive, self.envelope_times, self.envelope_values)


@dataclass(frozen=True)
class Propagation:
    U: np.ndarray
    t: float
    steps: int
    unitarity_residual: float
    richardson_gap: float


def default_steps(hspec: TimeDependentHamiltonian, t: float, hbar_eff: float) -> int:
    n = int(np.ceil(400 * t * hspec.spectral_radius() / hbar_eff))
    return int(np.clip(n, MIN_STEPS, MAX_STEPS))


def unitarity_residual(u: np.ndarray) -> float:
    return max_abs(u.conj().T @ u - np.eye(u.shape[0]))


def _evolve(hspec, t0: float, t1: float, steps: int, hbar_eff: float) -> np.ndarray:
    d = hspec.dim
    u = np.eye(d, dtype=complex)
    if t1 <= t0:
        return u
    total = t1 - t0
    for a, b, const in hspec.segments():
        lo, hi = max(a, t0), min(b, t1)
        if hi <= lo:
            continue
        if const is not None:
            u = unitary_exp(const, (hi - lo) / hbar_eff) @ u
            continue
        n = max(1, int(round(steps * (hi - lo) / total)))
        dt = (hi - lo) / n
        for k in range(n):
            h = hspec.at(lo + (k + 0.5) * dt)
            w, v = np.linalg.eigh(h)
            u = (v * np.exp(-1j * dt * w / hbar_eff)) @ (v.conj().T @ u)
    return u


def top_population(ket_or_rho, fraction: float = 0.1) -> float:
    """Population held by the top ``fraction`` of basis levels."""
    if isinstance(ket_or_rho, DensityMatrix):
        diag = np.diag(ket_or_rho.matrix).real
    else:
        diag = np.abs(np.asarray(ket_or_rho)) ** 2
    cut = int(np.floor(len(diag) * (1 - fraction)))
    return float(diag[cut:].sum())


def propagate(
    hspec: TimeDependentHamiltonian,
    t: float,
    steps: int | None = None,
    hbar_eff: float = 1.0,
    *,
    t0: float = 0.0,
    certify: bool = True,
    monitor: DensityMatrix | np.ndarray | None = None,
) -> Propagation:
    """Midpoint-exponential propagator from ``t0`` to ``t``.

    The step-halving gap ||U_steps - U_2steps||_max is attached when ``certify``.
    For oscillator Hamiltonians a ``monitor`` state is evolved and rejected if
    it leaks into the top 10% of the Fock truncation.
    """
    if not (0 <= t0 <= t <= hspec.tau):
        raise DomainError(f"need 0 <= t0 <= t <= tau, got t0={t0}, t={t}, tau={hspec.tau}")
    if steps is None:
        steps = default_steps(hspec, t - t0, hbar_eff)
    if steps < 1:
        raise DomainError("steps must be >= 1")
    u = _evolve(hspec, t0, t, steps, hbar_eff)
    gap = max_abs(u - _evolve(hspec, t0, t, 2 * steps, hbar_eff)) if certify else float("nan")
    res = unitarity_residual(u)
    if res > UNITARITY_TOL:
        raise NonUnitary(f"unitarity residual {res:.3e} > {UNITARITY_TOL:g}")
    if monitor is not None and isinstance(hspec, LinearRampOscillator):
        evolved = monitor.evolve(u) if isinstance(monitor, DensityMatrix) else u @ np.asarray(monitor)
        leak = top_population(evolved)
        if leak > LEAKAGE_TOL:
            raise TruncationLeakage(f"top-10% Fock population {leak:.3e} > {LEAKAGE_TOL:g}")
    return Propagation(u, t, steps, res, gap)


def heisenberg_hamiltonian(hspec: TimeDependentHamiltonian, t: float, u: np.ndarray) -> HermitianOperator:
    h = hspec.final() if t >= hspec.tau else hspec.H(t)
    u = np.asarray(u, dtype=complex)
    if u.shape != h.shape:
        raise DimensionMismatch(f"propagator {u.shape} vs Hamiltonian {h.shape}")
    hh = u.conj().T @ h @ u
    return HermitianOperator(0.5 * (hh + hh.conj().T))
