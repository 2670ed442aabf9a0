import numpy as np
import pytest
from scipy.linalg import expm

from qwork.dynamics import (
    Constant,
    LinearRampOscillator,
    PiecewiseTable,
    Quench,
    TwoLevelDrive,
    heisenberg_hamiltonian,
    propagate,
    top_population,
)
from qwork.errors import DimensionMismatch, DomainError, TruncationLeakage
from qwork.numkit import max_abs
from qwork.oscillator import OscillatorParams, heisenberg_hamiltonian_matrix
from qwork.quantum import DensityMatrix, FockAlgebra, coherent_state, random_hermitian

SZ = np.diag([1.0, -1.0])
SX = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_constant_matches_matrix_exponential():
    rng = np.random.default_rng(1)
    h = random_hermitian(5, rng)
    prop = propagate(Constant(h, 1.7), 1.7, hbar_eff=0.5)
    assert max_abs(prop.U - expm(-1j * 1.7 * h / 0.5)) <= 1e-12
    assert prop.unitarity_residual <= 1e-12


def test_sudden_quench_is_identity():
    q = Quench(SZ, SX)
    prop = propagate(q, 0.0)
    assert max_abs(prop.U - np.eye(2)) == 0
    assert np.array_equal(q.initial(), SZ) and np.array_equal(q.final(), SX)


def test_delayed_quench_is_product_of_exponentials():
    q = Quench(SZ, SX, switch_time=0.4, tau=1.0)
    u = propagate(q, 1.0).U
    ref = expm(-1j * 0.6 * SX) @ expm(-1j * 0.4 * SZ)
    assert max_abs(u - ref) <= 1e-12


def test_constant_envelope_drive_is_exact():
    drive = TwoLevelDrive(SZ, SX, [0.0, 2.0], [0.3, 0.3])
    u = propagate(drive, 2.0, 50).U
    assert max_abs(u - expm(-2j * (SZ + 0.3 * SX))) <= 1e-12


def test_midpoint_scheme_is_second_order():
    rng = np.random.default_rng(3)
    table = PiecewiseTable([0.0, 1.0], [random_hermitian(4, rng), random_hermitian(4, rng)])
    ref = propagate(table, 1.0, 6400, certify=False).U
    errs = [max_abs(propagate(table, 1.0, n, certify=False).U - ref) for n in (50, 100, 200)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2) < 0.1)


def test_propagation_composes():
    rng = np.random.default_rng(4)
    table = PiecewiseTable([0.0, 0.5, 1.0], [random_hermitian(3, rng) for _ in range(3)])
    full = propagate(table, 1.0, 400).U
    first = propagate(table, 0.5, 200).U
    second = propagate(table, 1.0, 200, t0=0.5).U
    assert max_abs(second @ first - full) <= 1e-12


def test_step_halving_gap_reported():
    table = PiecewiseTable([0.0, 1.0], [SZ, SX])
    prop = propagate(table, 1.0, 200)
    assert 0 < prop.richardson_gap < 1e-4


def test_heisenberg_hamiltonian_keeps_spectrum():
    rng = np.random.default_rng(5)
    table = PiecewiseTable([0.0, 1.0], [random_hermitian(4, rng), random_hermitian(4, rng)])
    u = propagate(table, 1.0, 100).U
    hh = heisenberg_hamiltonian(table, 1.0, u)
    assert np.allclose(np.linalg.eigvalsh(hh.matrix), np.linalg.eigvalsh(table.final()), atol=1e-12)
    with pytest.raises(DimensionMismatch):
        heisenberg_hamiltonian(table, 1.0, np.eye(3))


def test_domain_errors():
    with pytest.raises(DomainError):
        propagate(Constant(SZ, 1.0), 2.0)
    with pytest.raises(DomainError):
        PiecewiseTable([0.0, 0.0], [SZ, SX])
    with pytest.raises(DomainError):
        Constant(SZ, 0.0)


def test_oscillator_leakage_detected():
    alg = FockAlgebra(20)
    hspec = LinearRampOscillator(alg, 3.0, 1.0)
    rho = coherent_state(1.5, alg)
    with pytest.raises(TruncationLeakage):
        propagate(hspec, 1.0, 200, monitor=rho)


def test_top_population():
    v = np.zeros(10)
    v[9] = 1.0
    assert top_population(v) == pytest.approx(1.0)
    assert top_population(DensityMatrix.maximally_mixed(10)) == pytest.approx(0.1)


def test_oscillator_low_block_matches_closed_form():
    # the inner 10 x 10 block is free of truncation effects at dim 120
    params = OscillatorParams(1.0, 1.0, 3.0, 1.0)
    dim = 120
    hspec = LinearRampOscillator(params.algebra(dim), params.omega1, params.tau)
    u = propagate(hspec, params.tau, 4000, certify=False).U
    numeric = heisenberg_hamiltonian(hspec, params.tau, u).matrix
    closed = heisenberg_hamiltonian_matrix(params, params.tau, dim).matrix
    assert max_abs(numeric[:10, :10] - closed[:10, :10]) <= 1e-6
