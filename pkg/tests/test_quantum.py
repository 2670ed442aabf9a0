import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwork.errors import DegenerateSpectrum, DimensionMismatch, DomainError, TruncationTooSmall
from qwork.numkit import max_abs
from qwork.quantum import (
    DensityMatrix,
    FockAlgebra,
    coherent_ket,
    coherent_state,
    dephase,
    dim_for_coherent,
    eigenspace_projectors,
    expectation,
    fock_state,
    fock_tail_mass,
    l1_coherence,
    random_density_matrix,
    random_hermitian,
    rel_entropy_coherence,
    von_neumann_entropy,
)

SZ = np.diag([1.0, -1.0])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_density_matrix_validation():
    with pytest.raises(DomainError):
        DensityMatrix(np.diag([0.6, 0.6]))
    with pytest.raises(DomainError):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(DomainError):
        DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]))


def test_plus_state_coherence():
    plus = DensityMatrix.from_ket([1, 1])
    assert l1_coherence(plus, SZ) == pytest.approx(1.0, abs=1e-15)
    assert rel_entropy_coherence(plus, SZ) == pytest.approx(math.log(2), abs=1e-12)
    assert l1_coherence(plus, SX) == pytest.approx(0.0, abs=1e-15)


def test_l1_coherence_degenerate_raises():
    rho = DensityMatrix.maximally_mixed(3)
    with pytest.raises(DegenerateSpectrum):
        l1_coherence(rho, np.diag([1.0, 1.0, 2.0]))


def test_dephase_respects_degenerate_blocks():
    ket = np.array([1, 1, 1]) / math.sqrt(3)
    rho = DensityMatrix.from_ket(ket)
    out = dephase(rho, np.diag([1.0, 1.0, 2.0]))
    assert out.matrix[0, 1] == pytest.approx(1 / 3)
    assert out.matrix[0, 2] == pytest.approx(0.0)
    assert len(eigenspace_projectors(np.diag([1.0, 1.0, 2.0]))) == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_dephasing_is_idempotent_and_incoherent(d, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(d, rng)
    rho = random_density_matrix(d, rng)
    once = dephase(rho, h)
    assert max_abs(dephase(once, h).matrix - once.matrix) <= 1e-12
    assert l1_coherence(once, h) <= 1e-12
    assert np.trace(once.matrix).real == pytest.approx(1.0, abs=1e-12)
    assert rel_entropy_coherence(rho, h) >= -1e-12


def test_entropy_of_mixed_state():
    assert von_neumann_entropy(DensityMatrix.maximally_mixed(4)) == pytest.approx(math.log(4))
    assert von_neumann_entropy(fock_state(2, 4)) == pytest.approx(0.0, abs=1e-12)


def test_expectation_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        expectation(fock_state(0, 3), SZ)


def test_fock_algebra_scales_and_commutator():
    alg = FockAlgebra(30, hbar_eff=0.5, mass=2.0, omega0=3.0)
    assert alg.x_scale == pytest.approx(math.sqrt(0.5 / 12))
    assert alg.p_scale == pytest.approx(math.sqrt(2 * 0.5 * 3 / 2))
    assert alg.commutator_residual() / alg.hbar_eff <= 1e-12
    x, p = alg.X.matrix, alg.P.matrix
    comm = x @ p - p @ x
    assert comm[-1, -1] != pytest.approx(1j * alg.hbar_eff)  # truncation edge


def test_exact_truncated_squares_differ_from_squared_truncations_only_at_edge():
    alg = FockAlgebra(12)
    x = alg.X.matrix
    diff = alg.X2 - x @ x
    assert max_abs(diff[:-1, :-1]) <= 1e-14
    assert abs(diff[-1, -1]) > 0.1
    ham = 0.5 * (alg.P2 + alg.X2)
    assert max_abs(ham - alg.number_hamiltonian()) <= 1e-12


def test_matrix_free_operators_match_dense():
    alg = FockAlgebra(25, hbar_eff=0.3)
    v = coherent_ket(1.2 - 0.7j, 25)
    assert np.allclose(alg.apply_x(v), alg.X.matrix @ v)
    assert np.allclose(alg.apply_p(v), alg.P.matrix @ v)
    assert np.allclose(alg.apply_word("PX", v), alg.P.matrix @ (alg.X.matrix @ v))


@pytest.mark.parametrize("alpha", [0, 0.5 + 0.3j, -2 + 1j, 3j])
def test_coherent_state_centre_and_variance(alpha):
    alg = FockAlgebra(80, hbar_eff=0.7, mass=1.3, omega0=0.9)
    rho = coherent_state(alpha, alg)
    x0, p0 = alg.center_of(complex(alpha))
    assert expectation(rho, alg.X) == pytest.approx(x0, abs=1e-12)
    assert expectation(rho, alg.P) == pytest.approx(p0, abs=1e-12)
    assert expectation(rho, alg.X2) - x0**2 == pytest.approx(alg.x_scale**2, abs=1e-10)
    assert expectation(rho, alg.P2) - p0**2 == pytest.approx(alg.p_scale**2, abs=1e-10)
    assert alg.alpha_for(x0, p0) == pytest.approx(complex(alpha))


def test_coherent_truncation_guard():
    with pytest.raises(TruncationTooSmall):
        coherent_ket(5.0, 20)
    d = dim_for_coherent(5.0)
    assert fock_tail_mass(5.0, d) <= 1e-10 < fock_tail_mass(5.0, d - 1)
    assert abs(np.linalg.norm(coherent_ket(5.0, d)) - 1) <= 1e-14
