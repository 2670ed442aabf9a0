"""Classical phase-space trajectories, work per trajectory and the classical work distribution."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NonFinite, OrderTooHigh
from .work import CLASSICAL, WorkDistribution

DEFAULT_STEPS = 2000
MAX_MOMENT_ORDER = 12
GH_POINTS = 64

Field = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.p)):
            raise NonFinite(f"phase point ({self.x}, {self.p}) is not finite")


@dataclass(frozen=True)
class Delta:
    point: PhasePoint


@dataclass(frozen=True)
class Gaussian:
    """Independent normal marginals centred on ``mean``."""

    mean: PhasePoint
    sigma_x: float
    sigma_p: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_p > 0):
            raise DomainError("Gaussian widths must be positive")


@dataclass(frozen=True, eq=False)
class SampleSet:
    xs: np.ndarray
    ps: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        xs, ps, ws = (np.asarray(a, dtype=float).ravel() for a in (self.xs, self.ps, self.weights))
        if not (xs.size == ps.size == ws.size) or xs.size == 0:
            raise DomainError("sample arrays must be non-empty and equally long")
        if np.any(ws < 0) or abs(ws.sum() - 1.0) > 1e-9:
            raise DomainError("sample weights must be non-negative and sum to 1")
        for name, arr in (("xs", xs), ("ps", ps), ("weights", ws)):
            object.__setattr__(self, name, arr)


PhaseDistribution = Delta | Gaussian | SampleSet


@dataclass(frozen=True, eq=False)
class ClassicalHamiltonianSpec:
    """H(x, p, t) with its partial derivatives; all callables accept numpy arrays."""

    h: Field
    dh_dx: Field
    dh_dp: Field
    tau: float
    check_points: int = 5

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if self.check_points:
            self.check_derivatives(self.check_points)

    def check_derivatives(self, n_points: int = 5, rtol: float = 1e-6) -> float:
        """Compare the supplied derivatives with central differences; returns the worst error."""
        rng = np.random.default_rng(12345)
        pts = rng.uniform(-2, 2, size=(n_points, 2))
        ts = rng.uniform(0, self.tau, size=n_points)
        worst = 0.0
        for (x, p), t in zip(pts, ts):
            hx = 1e-5 * max(1.0, abs(x))
            hp = 1e-5 * max(1.0, abs(p))
            fd_x = (self.h(x + hx, p, t) - self.h(x - hx, p, t)) / (2 * hx)
            fd_p = (self.h(x, p + hp, t) - self.h(x, p - hp, t)) / (2 * hp)
            for fd, exact in ((fd_x, self.dh_dx(x, p, t)), (fd_p, self.dh_dp(x, p, t))):
                err = abs(fd - exact) / max(1.0, abs(exact))
                worst = max(worst, float(err))
        if worst > rtol:
            raise DomainError(f"derivatives disagree with finite differences ({worst:.2e})")
        return worst


def ramp_oscillator(mass: float = 1.0, omega0: float = 1.0, omega1: float = 3.0, tau: float = 1.0):
    """p^2/2m + m w^2(t) x^2/2 with w^2 linear in t from omega0^2 to omega1^2."""
    if not (mass > 0 and omega0 > 0 and omega1 > 0):
        raise DomainError("mass and frequencies must be positive")

    def w2(t):
        return omega0**2 + (omega1**2 - omega0**2) * t / tau

    return ClassicalHamiltonianSpec(
        h=lambda x, p, t: p**2 / (2 * mass) + 0.5 * mass * w2(t) * x**2,
        dh_dx=lambda x, p, t: mass * w2(t) * x,
        dh_dp=lambda x, p, t: p / mass,
        tau=tau,
    )


def static_oscillator(mass: float = 1.0, omega: float = 1.0, tau: float = 1.0):
    return ramp_oscillator(mass, omega, omega, tau)


def free_particle(mass: float = 1.0, tau: float = 1.0):
    return ClassicalHamiltonianSpec(
        h=lambda x, p, t: p**2 / (2 * mass) + 0 * x,
        dh_dx=lambda x, p, t: 0 * x,
        dh_dp=lambda x, p, t: p / mass,
        tau=tau,
    )


def flow(spec: ClassicalHamiltonianSpec, x, p, t: float, steps: int = DEFAULT_STEPS, t0: float = 0.0):
    """RK4 on Hamilton's equations, vectorised over arrays of initial points."""
    if not 0 <= t0 <= t <= spec.tau:
        raise DomainError(f"need 0 <= t0 <= t <= tau, got t0={t0}, t={t}")
    if steps < 1:
        raise DomainError("steps must be >= 1")
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)
    dt = (t - t0) / steps
    if dt == 0:
        return x, p

    def rhs(xx, pp, s):
        return spec.dh_dp(xx, pp, s), -spec.dh_dx(xx, pp, s)

    s = t0
    for _ in range(steps):
        k1x, k1p = rhs(x, p, s)
        k2x, k2p = rhs(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, s + 0.5 * dt)
        k3x, k3p = rhs(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, s + 0.5 * dt)
        k4x, k4p = rhs(x + dt * k3x, p + dt * k3p, s + dt)
        x = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        p = p + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        s += dt
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        raise NonFinite("trajectory left the finite numbers")
    return x, p


def evolve_trajectory(spec, gamma0: PhasePoint, t: float, steps: int = DEFAULT_STEPS) -> PhasePoint:
    x, p = flow(spec, gamma0.x, gamma0.p, t, steps)
    return PhasePoint(float(x), float(p))


def step_halving_gap(spec, gamma0: PhasePoint, t: float, steps: int = DEFAULT_STEPS) -> float:
    a = evolve_trajectory(spec, gamma0, t, steps)
    b = evolve_trajectory(spec, gamma0, t, 2 * steps)
    return max(abs(a.x - b.x), abs(a.p - b.p))


def monodromy(spec, t: float | None = None, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """Matrix of the (linear) flow fitted from the two unit trajectories."""
    t = spec.tau if t is None else t
    x, p = flow(spec, np.array([1.0, 0.0]), np.array([0.0, 1.0]), t, steps)
    return np.array([[x[0], x[1]], [p[0], p[1]]])


def classical_works(spec, x0, p0, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """W_CL = H(Gamma_tau, tau) - H(Gamma_0, 0), vectorised."""
    x0 = np.asarray(x0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    xt, pt = flow(spec, x0, p0, spec.tau, steps)
    return np.asarray(spec.h(xt, pt, spec.tau) - spec.h(x0, p0, 0.0), dtype=float)


def classical_work(spec, gamma0: PhasePoint, steps: int = DEFAULT_STEPS) -> float:
    return float(classical_works(spec, gamma0.x, gamma0.p, steps))


def _bin_atoms(works: np.ndarray, weights: np.ndarray, bin_width: float | None) -> WorkDistribution:
    lo, hi = float(works.min()), float(works.max())
    span = hi - lo
    floor = 1e-12 * max(1.0, abs(lo), abs(hi))
    if bin_width is None:
        bin_width = span / 512
    if bin_width <= floor:
        bin_width = floor
    idx = np.floor((works - lo) / bin_width).astype(np.int64)
    uniq, inv = np.unique(idx, return_inverse=True)
    mass = np.bincount(inv, weights=weights, minlength=uniq.size)
    moment = np.bincount(inv, weights=weights * works, minlength=uniq.size)
    keep = mass > 0
    vals = moment[keep] / mass[keep]
    probs = mass[keep] / mass.sum()
    return WorkDistribution(vals, probs, CLASSICAL)


def philox_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def gauss_hermite_nodes(dist: Gaussian, n: int = GH_POINTS):
    """Tensor-product Gauss-Hermite nodes and weights for the Gaussian phase distribution."""
    z, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / w.sum()
    xs = dist.mean.x + dist.sigma_x * z
    ps = dist.mean.p + dist.sigma_p * z
    gx, gp = np.meshgrid(xs, ps, indexing="ij")
    gw = np.outer(w, w)
    return gx.ravel(), gp.ravel(), gw.ravel()


def classical_work_distribution(
    spec: ClassicalHamiltonianSpec,
    dist: PhaseDistribution,
    n_samples: int = 10_000,
    seed: int = 0,
    bin_width: float | None = None,
    steps: int = DEFAULT_STEPS,
    method: str = "monte_carlo",
) -> WorkDistribution:
    """Push the phase distribution forward through W_CL and bin the result.

    Each atom sits at the weighted mean of the works in its bin, so the
    distribution mean equals the sample mean exactly.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    if isinstance(dist, Delta):
        w = classical_work(spec, dist.point, steps)
        return WorkDistribution(np.array([w]), np.array([1.0]), CLASSICAL)
    if isinstance(dist, SampleSet):
        xs, ps, ws = dist.xs, dist.ps, dist.weights
    elif isinstance(dist, Gaussian):
        if method == "quadrature":
            xs, ps, ws = gauss_hermite_nodes(dist)
        elif method == "monte_carlo":
            gen = philox_generator(seed)
            z = gen.standard_normal((2, n_samples))
            xs = dist.mean.x + dist.sigma_x * z[0]
            ps = dist.mean.p + dist.sigma_p * z[1]
            ws = np.full(n_samples, 1.0 / n_samples)
        else:
            raise DomainError(f"unknown method {method!r}")
    else:
        raise DomainError(f"unsupported phase distribution {type(dist).__name__}")
    works = classical_works(spec, xs, ps, steps)
    return _bin_atoms(works, ws, bin_width)


def _normal_raw_moment(mu: float, sigma: float, k: int) -> float:
    total = 0.0
    for j in range(k // 2 + 1):
        double_fact = math.prod(range(2 * j - 1, 0, -2)) if j else 1
        total += math.comb(k, 2 * j) * mu ** (k - 2 * j) * sigma ** (2 * j) * double_fact
    return total


def phase_moment(dist: PhaseDistribution, m: int, n: int) -> float:
    """Integral of p^m x^n against the phase distribution."""
    if m < 0 or n < 0:
        raise DomainError("moment orders must be non-negative")
    if m + n > MAX_MOMENT_ORDER:
        raise OrderTooHigh(f"order {m + n} exceeds {MAX_MOMENT_ORDER}")
    if isinstance(dist, Delta):
        return dist.point.p**m * dist.point.x**n
    if isinstance(dist, Gaussian):
        return _normal_raw_moment(dist.mean.p, dist.sigma_p, m) * _normal_raw_moment(dist.mean.x, dist.sigma_x, n)
    if isinstance(dist, SampleSet):
        return float(np.dot(dist.weights, dist.ps**m * dist.xs**n))
    raise DomainError(f"unsupported phase distribution {type(dist).__name__}")
