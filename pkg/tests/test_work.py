import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwork.dynamics import PiecewiseTable, TwoLevelDrive, heisenberg_hamiltonian, propagate
from qwork.errors import DimensionMismatch, DomainError, NegativeProbability
from qwork.numkit import max_abs
from qwork.quantum import DensityMatrix, dephase, fock_state, random_density_matrix, random_hermitian
from qwork.work import (
    WorkDistribution,
    apply_povm,
    binned_l1,
    characteristic_function,
    coherence_along_path,
    criteria_report,
    l1_distance,
    max_coherence_along_path,
    obs_povm,
    tpm_povm,
    work_operator,
)

SZ = np.diag([1.0, -1.0])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_sudden_quench_z_to_x_on_ground_state():
    rho = fock_state(0, 2)  # eigenvalue +1 of sigma_z
    u = np.eye(2)
    tpm = apply_povm(tpm_povm(SZ, SX, u), rho)
    assert tpm.values == pytest.approx([-2.0, 0.0])
    assert tpm.probs == pytest.approx([0.5, 0.5])
    obs = apply_povm(obs_povm(work_operator(SZ, SX)), rho)
    s = math.sqrt(2)
    assert obs.values == pytest.approx([-s, s])
    assert obs.probs == pytest.approx([(2 + s) / 4, (2 - s) / 4])
    assert obs.mean() == pytest.approx(-1.0)
    assert tpm.mean() == pytest.approx(-1.0)


def test_plus_state_tpm_misses_coherent_contribution():
    plus = DensityMatrix.from_ket([1, 1])
    povm = tpm_povm(SZ, SX, np.eye(2))
    rep = criteria_report(povm, SZ, SX, [plus])
    assert rep.first_law_state_gap == pytest.approx(1.0, abs=1e-12)
    obs_rep = criteria_report(obs_povm(work_operator(SZ, SX)), SZ, SX, [plus])
    assert obs_rep.first_law_state_gap <= 1e-12


def _scenario(seed, d):
    rng = np.random.default_rng(seed)
    table = PiecewiseTable([0.0, 1.0], [random_hermitian(d, rng), random_hermitian(d, rng)])
    u = propagate(table, 1.0, 40, certify=False).U
    return rng, table, u


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_povms_are_complete_and_positive(seed, d):
    rng, table, u = _scenario(seed, d)
    hh = heisenberg_hamiltonian(table, 1.0, u)
    for povm in (tpm_povm(table.initial(), table.final(), u), obs_povm(work_operator(table.initial(), hh))):
        assert povm.completeness_residual() <= 1e-10
        assert povm.min_effect_eigenvalue() >= -1e-12
        total = sum(m.matrix for _, m in povm.atoms)
        assert max_abs(total - np.eye(d)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.floats(0, 1))
def test_tpm_is_linear_and_ignores_coherences(seed, d, lam):
    rng, table, u = _scenario(seed, d)
    povm = tpm_povm(table.initial(), table.final(), u)
    r1, r2 = random_density_matrix(d, rng), random_density_matrix(d, rng)
    mix = DensityMatrix(lam * r1.matrix + (1 - lam) * r2.matrix)
    p = lambda r: apply_povm(povm, r, drop_below=0).probs
    assert np.allclose(p(mix), lam * p(r1) + (1 - lam) * p(r2), atol=1e-12)
    assert np.allclose(p(r1), p(dephase(r1, table.initial())), atol=1e-12)


def test_degenerate_initial_hamiltonian_uses_blocks():
    rng = np.random.default_rng(12)
    h0 = np.diag([0.0, 0.0, 1.0])
    h1 = random_hermitian(3, rng)
    u = np.eye(3)
    povm = tpm_povm(h0, h1, u)
    assert povm.blocks is not None
    assert povm.completeness_residual() <= 1e-12
    rho = random_density_matrix(3, rng)
    # block TPM keeps coherences inside the degenerate eigenspace
    d = apply_povm(povm, rho)
    rep = criteria_report(povm, h0, h1, [dephase(rho, h0)])
    assert rep.first_law_state_gap <= 1e-12
    assert d.probs.sum() == pytest.approx(1.0)
    # the result does not depend on the basis chosen inside the eigenspace
    rot = np.eye(3, dtype=complex)
    rot[:2, :2] = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    povm_rot = tpm_povm(rot @ h0 @ rot.conj().T, h1, u)
    d2 = apply_povm(povm_rot, rho)
    assert np.allclose(d.values, d2.values) and np.allclose(d.probs, d2.probs)


def test_commuting_case_distributions_coincide():
    h0 = np.diag([0.0, 1.0, 2.5])
    h1 = np.diag([0.3, 0.7, 3.0])
    table = PiecewiseTable([0.0, 1.0], [h0, h1])
    u = propagate(table, 1.0, 40).U
    rho = dephase(random_density_matrix(3, np.random.default_rng(0)), h0)
    hh = heisenberg_hamiltonian(table, 1.0, u)
    tpm = apply_povm(tpm_povm(h0, h1, u), rho)
    obs = apply_povm(obs_povm(work_operator(h0, hh)), rho)
    assert l1_distance(tpm, obs) <= 1e-12


def test_obs_merges_degenerate_work_eigenvalues():
    povm = obs_povm(np.diag([1.0, 1.0 + 1e-12, 2.0]))
    assert len(povm) == 2
    assert povm.values == pytest.approx([1.0, 2.0])


def test_l1_distance_properties():
    a = WorkDistribution(np.array([0.0, 1.0]), np.array([0.25, 0.75]), "TPM")
    b = WorkDistribution(np.array([0.0, 2.0]), np.array([0.5, 0.5]), "OBS")
    c = WorkDistribution(np.array([5.0]), np.array([1.0]), "OBS")
    assert l1_distance(a, a) == 0.0
    assert l1_distance(a, b) == pytest.approx(0.25 + 0.75 + 0.5)
    assert l1_distance(a, b) == l1_distance(b, a)
    assert l1_distance(a, c) == 2.0
    assert l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c)
    shifted = WorkDistribution(a.values + 1e-9, a.probs, "OBS")
    assert l1_distance(a, shifted) == pytest.approx(0.0, abs=1e-15)
    assert l1_distance(a, shifted, align_tol=1e-12) == pytest.approx(2.0)


def _random_dist(ws, rng):
    w = np.array(ws) + rng.choice([0.0, 0.5], size=len(ws))
    p = rng.uniform(0.1, 1, w.size)
    return WorkDistribution.from_samples(w, p / p.sum(), "TPM", merge_tol=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.integers(0, 2**32 - 1))
def test_l1_triangle_inequality(ws, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_random_dist(ws, rng) for _ in range(3))
    assert 0 <= l1_distance(a, b) <= 2
    assert l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c) + 1e-12


def test_binned_l1():
    a = WorkDistribution(np.array([0.1, 0.9]), np.array([0.5, 0.5]), "OBS")
    b = WorkDistribution(np.array([0.5]), np.array([1.0]), "Classical")
    assert binned_l1(a, b, 1.0) == pytest.approx(0.0)
    assert binned_l1(a, b, 0.5) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        binned_l1(a, b, 0.0)


def test_distribution_validation_and_merging():
    with pytest.raises(DomainError):
        WorkDistribution(np.array([1.0, 0.0]), np.array([0.5, 0.5]), "TPM")
    with pytest.raises(NegativeProbability):
        WorkDistribution(np.array([0.0, 1.0]), np.array([1.5, -0.5]), "TPM")
    d = WorkDistribution.from_samples([1.0, 0.0, 1.0 + 1e-12], [0.25, 0.5, 0.25], "TPM")
    assert d.values == pytest.approx([0.0, 1.0])
    assert d.probs == pytest.approx([0.5, 0.5])
    assert d.moment(2) == pytest.approx(0.5)


def test_characteristic_function_vectorised():
    d = WorkDistribution(np.array([-1.0, 2.0]), np.array([0.3, 0.7]), "TPM")
    u = np.array([0.0, 0.5, 1.0])
    chi = characteristic_function(d, u)
    ref = 0.3 * np.exp(-1j * u) + 0.7 * np.exp(2j * u)
    assert np.allclose(chi, ref)
    assert characteristic_function(d, 0.0) == pytest.approx(1.0)


def test_apply_povm_dimension_check():
    with pytest.raises(DimensionMismatch):
        apply_povm(obs_povm(SZ), fock_state(0, 3))


def test_coherence_along_path_for_weak_drive():
    drive = TwoLevelDrive(SZ, SX, [0.0, 1.0, 2.0], [0.0, 1.0, 1.0]).scaled(1e-3)
    rho = fock_state(0, 2)
    c = coherence_along_path(drive, rho, np.linspace(0, 2, 21))
    assert c[0] == pytest.approx(0.0, abs=1e-15)
    assert 0 < c.max() < 2e-3
    assert max_coherence_along_path(drive, rho, np.linspace(0, 2, 21)) == pytest.approx(c.max())
