"""Quantum states, observables, dephasing and coherence measures."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    DomainError,
    NonRealExpectation,
    TruncationTooSmall,
)
from .numkit import (
    as_matrix,
    check_hermitian,
    cluster_sorted,
    hermitian_eig,
    hermiticity_residual,
    max_abs,
)

STATE_TOL = 1e-10
TAIL_MASS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    matrix: np.ndarray
    unit_label: str = "energy"

    def __post_init__(self):
        object.__setattr__(self, "matrix", check_hermitian(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self):
        return hermitian_eig(self.matrix)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        _same_dim(self.dim, other.dim)
        return HermitianOperator(self.matrix - other.matrix, self.unit_label)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise DomainError(f"density matrix must be square, got {m.shape}")
        if hermiticity_residual(m) > STATE_TOL:
            raise DomainError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > STATE_TOL:
            raise DomainError(f"density matrix trace {tr!r} != 1")
        m = 0.5 * (m + m.conj().T)
        if np.linalg.eigvalsh(m)[0] < -STATE_TOL:
            raise DomainError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def evolve(self, u: np.ndarray) -> "DensityMatrix":
        m = u @ self.matrix @ u.conj().T
        return DensityMatrix(0.5 * (m + m.conj().T))


def _same_dim(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} vs {b}")


def _matrix_of(op) -> np.ndarray:
    return op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=complex)


@dataclass(frozen=True, eq=False)
class FockAlgebra:
    """Truncated oscillator algebra with X, P built from ladder operators.

    Dense matrices are built lazily, so very large truncations can still be
    used through the matrix-free ``apply_*`` methods.
    """

    dim: int
    hbar_eff: float = 1.0
    mass: float = 1.0
    omega0: float = 1.0

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError("Fock truncation needs dim >= 2")
        if not (self.hbar_eff > 0 and self.mass > 0 and self.omega0 > 0):
            raise DomainError("hbar_eff, mass and omega0 must be positive")

    @property
    def x_scale(self) -> float:
        return float(np.sqrt(self.hbar_eff / (2 * self.mass * self.omega0)))

    @property
    def p_scale(self) -> float:
        return float(np.sqrt(self.mass * self.hbar_eff * self.omega0 / 2))

    @cached_property
    def _sqrt_n(self) -> np.ndarray:
        return np.sqrt(np.arange(1, self.dim, dtype=float))

    @cached_property
    def annihilation(self) -> np.ndarray:
        return np.diag(self._sqrt_n, 1).astype(complex)

    @cached_property
    def X(self) -> HermitianOperator:
        a = self.annihilation
        return HermitianOperator(self.x_scale * (a + a.T), "position")

    @cached_property
    def P(self) -> HermitianOperator:
        a = self.annihilation
        return HermitianOperator(1j * self.p_scale * (a.T - a), "momentum")

    @cached_property
    def _padded(self) -> tuple[np.ndarray, np.ndarray]:
        big = FockAlgebra(self.dim + 2, self.hbar_eff, self.mass, self.omega0)
        return big.X.matrix, big.P.matrix

    def _project(self, m: np.ndarray) -> np.ndarray:
        return m[: self.dim, : self.dim]

    @cached_property
    def X2(self) -> np.ndarray:
        """Exact truncation of X^2 (no corner defect from squaring a truncated X)."""
        xb, _ = self._padded
        return self._project(xb @ xb)

    @cached_property
    def P2(self) -> np.ndarray:
        _, pb = self._padded
        return self._project(pb @ pb)

    @cached_property
    def XP_anti(self) -> np.ndarray:
        xb, pb = self._padded
        return self._project(xb @ pb + pb @ xb)

    def number_hamiltonian(self) -> np.ndarray:
        """H(0) = hbar*omega0*(N + 1/2), diagonal in the Fock basis."""
        n = np.arange(self.dim, dtype=float)
        return np.diag(self.hbar_eff * self.omega0 * (n + 0.5)).astype(complex)

    def commutator_residual(self, block: int | None = None) -> float:
        block = self.dim - 2 if block is None else block
        x, p = self.X.matrix, self.P.matrix
        c = (x @ p - p @ x)[:block, :block]
        return max_abs(c - 1j * self.hbar_eff * np.eye(block))

    # matrix-free action on kets (truncation drops the component above dim-1)
    def apply_a(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v, dtype=complex)
        out[:-1] = self._sqrt_n * v[1:]
        return out

    def apply_adag(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v, dtype=complex)
        out[1:] = self._sqrt_n * v[:-1]
        return out

    def apply_x(self, v: np.ndarray) -> np.ndarray:
        return self.x_scale * (self.apply_a(v) + self.apply_adag(v))

    def apply_p(self, v: np.ndarray) -> np.ndarray:
        return 1j * self.p_scale * (self.apply_adag(v) - self.apply_a(v))

    def apply_word(self, word: str, v: np.ndarray) -> np.ndarray:
        """Apply an operator product such as "XPX" (leftmost acts last)."""
        for ch in reversed(word):
            if ch == "X":
                v = self.apply_x(v)
            elif ch == "P":
                v = self.apply_p(v)
            else:
                raise DomainError(f"unknown operator letter {ch!r}")
        return v

    def alpha_for(self, x0: float, p0: float) -> complex:
        """Coherent amplitude whose <X>, <P> equal (x0, p0)."""
        return complex(x0 / (2 * self.x_scale), p0 / (2 * self.p_scale))

    def center_of(self, alpha: complex) -> tuple[float, float]:
        return 2 * self.x_scale * alpha.real, 2 * self.p_scale * alpha.imag


def fock_tail_mass(alpha: complex, dim: int) -> float:
    """Poisson mass of |alpha> above the truncation, P(N >= dim)."""
    lam = abs(alpha) ** 2
    if lam == 0:
        return 0.0
    return float(gammainc(dim, lam))


def dim_for_coherent(alpha: complex, tail: float = TAIL_MASS_TOL, headroom: int = 0) -> int:
    """Smallest truncation keeping the coherent tail mass below ``tail``."""
    lam = abs(alpha) ** 2
    lo = max(2, int(lam))
    hi = max(lo + 1, int(lam + 12 * np.sqrt(lam) + 40))
    while fock_tail_mass(alpha, hi) > tail:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fock_tail_mass(alpha, mid) > tail:
            lo = mid
        else:
            hi = mid
    return hi + headroom


def coherent_ket(alpha: complex, dim: int) -> np.ndarray:
    alpha = complex(alpha)
    tail = fock_tail_mass(alpha, dim)
    if tail > TAIL_MASS_TOL:
        raise TruncationTooSmall(f"|alpha|={abs(alpha):.4g} loses {tail:.3e} > {TAIL_MASS_TOL:g} above dim={dim}")
    n = np.arange(dim)
    if alpha == 0:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        return v
    logmag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    v = np.exp(logmag + 1j * n * np.angle(alpha))
    return v / np.linalg.norm(v)


def coherent_state(alpha: complex, algebra: FockAlgebra) -> DensityMatrix:
    return DensityMatrix.from_ket(coherent_ket(alpha, algebra.dim))


def fock_state(n: int, dim: int) -> DensityMatrix:
    if not 0 <= n < dim:
        raise DomainError(f"Fock level {n} outside truncation {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[n, n] = 1.0
    return DensityMatrix(m)


def default_degeneracy_tol(eigenvalues: np.ndarray) -> float:
    span = float(eigenvalues[-1] - eigenvalues[0]) if eigenvalues.size > 1 else 0.0
    return 1e-8 * max(span, 1e-300)


def eigenspace_projectors(h, degeneracy_tol: float | None = None) -> list[tuple[float, np.ndarray]]:
    """(mean eigenvalue, projector) per eigenvalue cluster of ``h``."""
    spec = _spectrum_of(h)
    tol = default_degeneracy_tol(spec.eigenvalues) if degeneracy_tol is None else degeneracy_tol
    out = []
    for idx in cluster_sorted(spec.eigenvalues, tol):
        v = spec.eigenvectors[:, idx]
        out.append((float(spec.eigenvalues[idx].mean()), v @ v.conj().T))
    return out


def _spectrum_of(h):
    if isinstance(h, HermitianOperator):
        return h.spectrum
    return hermitian_eig(h)


def dephase(rho: DensityMatrix, h, degeneracy_tol: float | None = None) -> DensityMatrix:
    """Block-dephase ``rho`` onto the eigenspaces of ``h``."""
    hm = _matrix_of(h)
    _same_dim(rho.dim, hm.shape[0])
    out = np.zeros_like(rho.matrix)
    for _, proj in eigenspace_projectors(h, degeneracy_tol):
        out += proj @ rho.matrix @ proj
    return DensityMatrix(0.5 * (out + out.conj().T))


def _nondegenerate_basis(h, degeneracy_tol: float | None) -> np.ndarray:
    spec = _spectrum_of(h)
    tol = default_degeneracy_tol(spec.eigenvalues) if degeneracy_tol is None else degeneracy_tol
    gaps = np.diff(spec.eigenvalues)
    if gaps.size and gaps.min() < tol:
        raise DegenerateSpectrum(f"eigenvalue gap {gaps.min():.3e} below degeneracy_tol {tol:.3e}")
    return spec.eigenvectors


def l1_coherence(rho: DensityMatrix, h, degeneracy_tol: float | None = None) -> float:
    """Sum of off-diagonal moduli of rho in the eigenbasis of h."""
    v = _nondegenerate_basis(h, degeneracy_tol)
    _same_dim(rho.dim, v.shape[0])
    r = v.conj().T @ rho.matrix @ v
    return float(np.abs(r).sum() - np.abs(np.diag(r)).sum())


def von_neumann_entropy(rho: DensityMatrix) -> float:
    lam = np.linalg.eigvalsh(rho.matrix)
    lam = lam[lam > 1e-14]
    return float(-(lam * np.log(lam)).sum())


def rel_entropy_coherence(rho: DensityMatrix, h, degeneracy_tol: float | None = None) -> float:
    _nondegenerate_basis(h, degeneracy_tol)
    val = von_neumann_entropy(dephase(rho, h, degeneracy_tol)) - von_neumann_entropy(rho)
    return max(val, 0.0)


def expectation(rho: DensityMatrix, a) -> float:
    am = _matrix_of(a)
    _same_dim(rho.dim, am.shape[0])
    val = np.einsum("ij,ji->", am, rho.matrix)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise NonRealExpectation(f"imaginary part {val.imag:.3e}")
    return float(val.real)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (g + g.conj().T)
