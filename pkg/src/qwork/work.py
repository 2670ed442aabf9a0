"""TPM and OBS work POVMs, atomic work distributions and the criteria checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .dynamics import TimeDependentHamiltonian, propagate, unitarity_residual
from .errors import DimensionMismatch, DomainError, NegativeProbability, NonUnitary
from .numkit import cluster_sorted, hermitian_eig, max_abs
from .quantum import DensityMatrix, HermitianOperator, default_degeneracy_tol, eigenspace_projectors, l1_coherence

TPM, OBS, CLASSICAL = "TPM", "OBS", "Classical"
COMPLETENESS_TOL = 1e-8
POSITIVITY_TOL = 1e-9


def default_merge_tol(scale: float) -> float:
    return 1e-8 * max(1.0, scale)


def _matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, HermitianOperator) else np.asarray(op, dtype=complex)


@dataclass(frozen=True, eq=False)
class WorkPovm:
    """Effects M_k = basis @ C_k @ basis^dagger attached to increasing work values.

    ``weights`` (sparse, atoms x dim) holds diagonal C_k; ``blocks`` (atoms x dim x dim)
    is used instead when an eigenspace of H(0) is degenerate.
    """

    values: np.ndarray
    basis: np.ndarray
    kind: str
    weights: sparse.csr_matrix | None = None
    blocks: np.ndarray | None = None

    def __post_init__(self):
        if (self.weights is None) == (self.blocks is None):
            raise DomainError("exactly one of weights/blocks must be given")
        if np.any(np.diff(self.values) <= 0):
            raise DomainError("work values must increase strictly")
        if self.completeness_residual() > COMPLETENESS_TOL:
            raise DomainError(f"effects do not sum to identity ({self.completeness_residual():.3e})")
        if self.min_effect_eigenvalue() < -POSITIVITY_TOL:
            raise DomainError("an effect is not positive semidefinite")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def component(self, k: int) -> np.ndarray:
        if self.weights is not None:
            return np.diag(self.weights.getrow(k).toarray().ravel()).astype(complex)
        return self.blocks[k]

    def effect(self, k: int) -> np.ndarray:
        v = self.basis
        return v @ self.component(k) @ v.conj().T

    @property
    def atoms(self) -> list[tuple[float, HermitianOperator]]:
        return [(float(w), HermitianOperator(self.effect(k), "dimensionless")) for k, w in enumerate(self.values)]

    def _weighted_sum_in_basis(self, coeffs: np.ndarray) -> np.ndarray:
        if self.weights is not None:
            return np.diag(self.weights.T @ coeffs).astype(complex)
        return np.tensordot(coeffs, self.blocks, axes=1)

    def completeness_residual(self) -> float:
        s = self._weighted_sum_in_basis(np.ones(len(self.values)))
        return max_abs(s - np.eye(self.dim))

    def min_effect_eigenvalue(self) -> float:
        if self.weights is not None:
            data_min = float(self.weights.data.min()) if self.weights.nnz else 0.0
            has_zero = self.weights.nnz < self.weights.shape[0] * self.weights.shape[1]
            return min(data_min, 0.0) if has_zero else data_min
        return float(min(np.linalg.eigvalsh(b)[0] for b in self.blocks))

    def first_moment_operator(self) -> np.ndarray:
        """Sum_k w_k M_k in the computational basis."""
        v = self.basis
        return v @ self._weighted_sum_in_basis(self.values) @ v.conj().T


@dataclass(frozen=True, eq=False)
class WorkDistribution:
    values: np.ndarray
    probs: np.ndarray
    provenance: str

    def __post_init__(self):
        w = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if w.shape != p.shape or w.ndim != 1 or w.size == 0:
            raise DomainError("values and probs must be equal-length non-empty vectors")
        if np.any(np.diff(w) <= 0):
            raise DomainError("work values must increase strictly")
        if np.any(p < -1e-12) or not np.all(np.isfinite(p)):
            raise NegativeProbability("distribution has negative or non-finite mass")
        if abs(p.sum() - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {p.sum()!r}")
        object.__setattr__(self, "values", w)
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))

    @classmethod
    def from_samples(cls, values, probs, provenance: str, merge_tol: float | None = None) -> "WorkDistribution":
        """Sort and merge atoms closer than ``merge_tol`` (mass-weighted position)."""
        w = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float)
        order = np.argsort(w, kind="stable")
        w, p = w[order], p[order]
        tol = default_merge_tol(float(np.max(np.abs(w)))) if merge_tol is None else merge_tol
        groups = cluster_sorted(w, tol)
        ws, ps = [], []
        for g in groups:
            mass = p[g].sum()
            ws.append(float(np.dot(w[g], p[g]) / mass) if mass > 0 else float(w[g].mean()))
            ps.append(mass)
        return cls(np.array(ws), np.array(ps), provenance)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def moment(self, k: int = 1) -> float:
        return float(np.dot(self.probs, self.values**k))

    def mean(self) -> float:
        return self.moment(1)


@dataclass(frozen=True)
class CriteriaReport:
    completeness_residual: float
    min_effect_eigenvalue: float
    first_law_operator_residual: float
    first_law_state_gap: float
    state_gaps: tuple[float, ...] = field(default=())
    degenerate_h0: bool = False


def work_operator(h0, hh_tau) -> HermitianOperator:
    """W = H_h(tau) - H(0)."""
    a, b = _matrix(h0), _matrix(hh_tau)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return HermitianOperator(b - a, "work")


def obs_povm(w_op, merge_tol: float | None = None) -> WorkPovm:
    """Spectral projectors of the work operator, one atom per eigenvalue cluster."""
    w_mat = _matrix(w_op)
    spec = w_op.spectrum if isinstance(w_op, HermitianOperator) else hermitian_eig(w_mat)
    tol = default_merge_tol(max_abs(w_mat)) if merge_tol is None else merge_tol
    groups = cluster_sorted(spec.eigenvalues, tol)
    rows = np.concatenate([np.full(len(g), k) for k, g in enumerate(groups)])
    cols = np.concatenate(groups)
    weights = sparse.csr_matrix((np.ones(cols.size), (rows, cols)), shape=(len(groups), w_mat.shape[0]))
    values = np.array([spec.eigenvalues[g].mean() for g in groups])
    return WorkPovm(values, spec.eigenvectors, OBS, weights=weights)


def tpm_povm(h0, h_tau, u, merge_tol: float | None = None) -> WorkPovm:
    """Two-point-measurement effects M(w) = sum p_{m|n} |e_n(0)><e_n(0)| over e_m(tau)-e_n(0) = w.

    Degenerate eigenspaces are handled with projectors, so conditional
    probabilities do not depend on a choice of basis inside an eigenspace.
    """
    a, b = _matrix(h0), _matrix(h_tau)
    u = np.asarray(u, dtype=complex)
    if not (a.shape == b.shape == u.shape):
        raise DimensionMismatch("H(0), H(tau) and U must share a shape")
    if unitarity_residual(u) > 1e-8:
        raise NonUnitary(f"U unitarity residual {unitarity_residual(u):.3e}")
    d = a.shape[0]
    spec0 = hermitian_eig(a)
    final_spaces = eigenspace_projectors(b)
    initial_spaces = eigenspace_projectors(a)
    scale = max(max_abs(a), max_abs(b))
    tol = default_merge_tol(scale) if merge_tol is None else merge_tol

    v0 = spec0.eigenvectors
    uv = u @ v0
    # columns of uv are U|e_n(0)>; rows of trans are final eigenspaces
    trans = np.array([np.real(np.einsum("in,ij,jn->n", uv.conj(), pm, uv)) for _, pm in final_spaces])
    e_final = np.array([e for e, _ in final_spaces])
    degenerate = len(initial_spaces) < d

    if not degenerate:
        e0 = spec0.eigenvalues
        w_pairs = (e_final[:, None] - e0[None, :]).ravel()
        n_idx = np.tile(np.arange(d), len(e_final))
        weight = trans.ravel()
        order = np.argsort(w_pairs, kind="stable")
        groups = cluster_sorted(w_pairs[order], tol)
        atom_of = np.empty(w_pairs.size, dtype=int)
        values = np.empty(len(groups))
        for k, g in enumerate(groups):
            atom_of[order[g]] = k
            values[k] = w_pairs[order[g]].mean()
        weights = sparse.csr_matrix((weight, (atom_of, n_idx)), shape=(len(groups), d))
        weights.sum_duplicates()
        return WorkPovm(values, v0, TPM, weights=weights)

    # block version: M(w) = sum Pi_n(0) U^dag Pi_m(tau) U Pi_n(0), written in the H(0) eigenbasis
    groups0 = cluster_sorted(spec0.eigenvalues, default_degeneracy_tol(spec0.eigenvalues))
    pairs = []
    for m, (em, pm) in enumerate(final_spaces):
        pm_b = uv.conj().T @ pm @ uv
        for g in groups0:
            blk = np.zeros((d, d), dtype=complex)
            blk[np.ix_(g, g)] = pm_b[np.ix_(g, g)]
            pairs.append((em - spec0.eigenvalues[g].mean(), blk))
    pairs.sort(key=lambda t: t[0])
    ws = np.array([p[0] for p in pairs])
    values, blocks = [], []
    for g in cluster_sorted(ws, tol):
        values.append(ws[g].mean())
        blocks.append(sum(pairs[i][1] for i in g))
    return WorkPovm(np.array(values), v0, TPM, blocks=np.array(blocks))


def apply_povm(povm: WorkPovm, rho: DensityMatrix, drop_below: float = 1e-14) -> WorkDistribution:
    """P(w_k) = Tr[M_k rho]; atoms with probability below ``drop_below`` are left out."""
    if rho.dim != povm.dim:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs state dim {rho.dim}")
    r = povm.basis.conj().T @ rho.matrix @ povm.basis
    if povm.weights is not None:
        p = povm.weights @ np.real(np.diag(r))
    else:
        p = np.real(np.einsum("kij,ji->k", povm.blocks, r))
    if np.any(p < -POSITIVITY_TOL):
        raise NegativeProbability(f"probability {p.min():.3e} below -{POSITIVITY_TOL:g}")
    p = np.where(p < 0, 0.0, p)
    keep = p >= drop_below
    return WorkDistribution(povm.values[keep], p[keep], povm.kind)


def characteristic_function(dist: WorkDistribution, u):
    """chi(u) = sum_k p_k exp(i u w_k); vectorised over ``u``."""
    u_arr = np.asarray(u, dtype=float)
    out = np.exp(1j * np.multiply.outer(u_arr, dist.values)) @ dist.probs
    return complex(out) if u_arr.ndim == 0 else out


def l1_distance(a: WorkDistribution, b: WorkDistribution, align_tol: float | None = None) -> float:
    """Sum over aligned atoms of |p_a - p_b|; 2 for disjoint supports."""
    w = np.concatenate([a.values, b.values])
    mass = np.concatenate([a.probs, -b.probs])
    if align_tol is None:
        align_tol = 10 * default_merge_tol(float(np.max(np.abs(w))))
    order = np.argsort(w, kind="stable")
    total = 0.0
    for g in cluster_sorted(w[order], align_tol):
        total += abs(mass[order[g]].sum())
    return float(min(total, 2.0))


def binned_l1(a: WorkDistribution, b: WorkDistribution, bin_width: float, origin: float = 0.0) -> float:
    """L1 distance after histogramming both distributions on a common grid."""
    if not bin_width > 0:
        raise DomainError("bin_width must be positive")
    ia = np.floor((a.values - origin) / bin_width).astype(np.int64)
    ib = np.floor((b.values - origin) / bin_width).astype(np.int64)
    keys = np.concatenate([ia, ib])
    mass = np.concatenate([a.probs, -b.probs])
    uniq, inv = np.unique(keys, return_inverse=True)
    return float(np.abs(np.bincount(inv, weights=mass, minlength=uniq.size)).sum())


def criteria_report(povm: WorkPovm, h0, hh_tau, rho_samples: Iterable[DensityMatrix]) -> CriteriaReport:
    a, b = _matrix(h0), _matrix(hh_tau)
    w_op = b - a
    gaps = []
    for rho in rho_samples:
        mean_w = apply_povm(povm, rho).mean()
        d_energy = float(np.real(np.trace(w_op @ rho.matrix)))
        gaps.append(abs(mean_w - d_energy))
    return CriteriaReport(
        completeness_residual=povm.completeness_residual(),
        min_effect_eigenvalue=povm.min_effect_eigenvalue(),
        first_law_operator_residual=max_abs(povm.first_moment_operator() - w_op),
        first_law_state_gap=max(gaps) if gaps else 0.0,
        state_gaps=tuple(gaps),
        degenerate_h0=povm.blocks is not None,
    )


def coherence_along_path(
    hspec: TimeDependentHamiltonian,
    rho0: DensityMatrix,
    time_grid: Sequence[float],
    hbar_eff: float = 1.0,
    steps_per_interval: int | None = None,
) -> np.ndarray:
    """l1 coherence of U_t rho0 U_t^dagger with respect to H(t) at each grid time."""
    grid = np.asarray(time_grid, dtype=float)
    if grid.size == 0 or grid[0] != 0 or grid[-1] != hspec.tau or np.any(np.diff(grid) < 0):
        raise DomainError("time grid must increase from 0 to tau")
    out = np.empty(grid.size)
    u = np.eye(hspec.dim, dtype=complex)
    prev = 0.0
    for k, t in enumerate(grid):
        if t > prev:
            u = propagate(hspec, t, steps_per_interval, hbar_eff, t0=prev, certify=False).U @ u
            prev = t
        h = hspec.final() if t >= hspec.tau else hspec.H(t)
        out[k] = l1_coherence(rho0.evolve(u), h)
    return out


def max_coherence_along_path(hspec, rho0, time_grid, hbar_eff: float = 1.0, steps_per_interval=None) -> float:
    vals = coherence_along_path(hspec, rho0, time_grid, hbar_eff, steps_per_interval)
    if hspec.tau == 0:
        # sudden quench: the state is measured against both H(0) and H(tau)
        vals = np.append(vals, l1_coherence(rho0, hspec.initial()))
    return float(vals.max())
