import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwork.classical import (
    ClassicalHamiltonianSpec,
    Delta,
    Gaussian,
    PhasePoint,
    SampleSet,
    classical_work,
    classical_work_distribution,
    flow,
    free_particle,
    gauss_hermite_nodes,
    monodromy,
    phase_moment,
    ramp_oscillator,
    static_oscillator,
    step_halving_gap,
)
from qwork.errors import DomainError, NonFinite, OrderTooHigh
from qwork.oscillator import OscillatorParams, energy_deltas

W_CL_11 = 3.952648263022518  # closed-form classical work at (x0, p0) = (1, 1), default ramp


def test_static_oscillator_matches_analytic_flow():
    spec = static_oscillator(2.0, 1.5, 3.0)
    x, p = flow(spec, 0.7, -0.4, 3.0)
    w, m = 1.5, 2.0
    xr = 0.7 * math.cos(w * 3) + (-0.4) / (m * w) * math.sin(w * 3)
    pr = -0.4 * math.cos(w * 3) - m * w * 0.7 * math.sin(w * 3)
    assert x == pytest.approx(xr, abs=1e-10)
    assert p == pytest.approx(pr, abs=1e-10)


def test_free_particle_is_exact():
    x, p = flow(free_particle(2.0, 1.0), 1.0, 3.0, 1.0, steps=10)
    assert (x, p) == pytest.approx((2.5, 3.0), abs=1e-14)


def test_ramp_work_matches_closed_form():
    spec = ramp_oscillator()
    assert classical_work(spec, PhasePoint(1.0, 1.0)) == pytest.approx(W_CL_11, rel=1e-10)
    assert step_halving_gap(spec, PhasePoint(1.0, 1.0), 1.0) < 1e-10


def test_monodromy_is_symplectic():
    m = monodromy(ramp_oscillator(1.0, 1.0, 2.5, 1.0))
    assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)


def test_delta_gives_single_atom():
    d = classical_work_distribution(ramp_oscillator(), Delta(PhasePoint(1.0, 1.0)))
    assert d.values.size == 1 and d.probs[0] == 1.0
    assert d.values[0] == pytest.approx(W_CL_11, rel=1e-10)


def _gaussian_mean_work(g: Gaussian) -> float:
    dE, dF, dG = energy_deltas(OscillatorParams())
    x, p = g.mean.x, g.mean.p
    return dE * (x**2 + g.sigma_x**2) + dF * (p**2 + g.sigma_p**2) + 2 * dG * x * p


def test_gaussian_quadrature_mean_is_exact():
    g = Gaussian(PhasePoint(1.0, 1.0), 0.3, 0.5)
    d = classical_work_distribution(ramp_oscillator(), g, method="quadrature")
    assert d.mean() == pytest.approx(_gaussian_mean_work(g), rel=1e-10)


def test_gaussian_monte_carlo_mean_within_sampling_error():
    g = Gaussian(PhasePoint(1.0, 1.0), 0.3, 0.5)
    n = 20000
    d = classical_work_distribution(ramp_oscillator(), g, n_samples=n, seed=3)
    sd = math.sqrt(max(d.moment(2) - d.mean() ** 2, 0))
    assert abs(d.mean() - _gaussian_mean_work(g)) < 5 * sd / math.sqrt(n)
    assert d.values.size <= 513


def test_sampling_is_deterministic_per_seed():
    g = Gaussian(PhasePoint(0.5, -0.2), 0.4, 0.4)
    spec = ramp_oscillator()
    a = classical_work_distribution(spec, g, n_samples=500, seed=11, steps=200)
    b = classical_work_distribution(spec, g, n_samples=500, seed=11, steps=200)
    c = classical_work_distribution(spec, g, n_samples=500, seed=12, steps=200)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.probs, b.probs)
    assert not np.array_equal(a.values, c.values)


def test_sample_set_weights():
    s = SampleSet(np.array([1.0, 1.0]), np.array([1.0, 1.0]), np.array([0.5, 0.5]))
    d = classical_work_distribution(ramp_oscillator(), s)
    assert d.values.size == 1 and d.values[0] == pytest.approx(W_CL_11, rel=1e-10)
    with pytest.raises(DomainError):
        SampleSet(np.array([1.0]), np.array([1.0]), np.array([0.7]))


def test_wrong_derivative_is_rejected():
    with pytest.raises(DomainError):
        ClassicalHamiltonianSpec(
            h=lambda x, p, t: p**2 / 2 + x**2 / 2,
            dh_dx=lambda x, p, t: 2 * x,
            dh_dp=lambda x, p, t: p,
            tau=1.0,
        )


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_runaway_trajectory_raises():
    spec = ClassicalHamiltonianSpec(
        h=lambda x, p, t: p**2 / 2 - x**4,
        dh_dx=lambda x, p, t: -4 * x**3,
        dh_dp=lambda x, p, t: p,
        tau=1.0,
    )
    with pytest.raises(NonFinite):
        flow(spec, 1e3, 0.0, 1.0, steps=50)


def test_invalid_inputs():
    with pytest.raises(NonFinite):
        PhasePoint(float("nan"), 0.0)
    with pytest.raises(DomainError):
        Gaussian(PhasePoint(0, 0), 0.0, 1.0)
    with pytest.raises(OrderTooHigh):
        phase_moment(Delta(PhasePoint(1, 1)), 7, 6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 1.5))
def test_gaussian_moments_match_quadrature(m, n, x0, p0, s):
    g = Gaussian(PhasePoint(x0, p0), s, 0.5 * s + 0.1)
    xs, ps, ws = gauss_hermite_nodes(g, 16)
    ref = float(np.dot(ws, ps**m * xs**n))
    assert phase_moment(g, m, n) == pytest.approx(ref, rel=1e-10, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.3, 3.0))
def test_energy_conserved_for_static_oscillator(x0, p0, w):
    spec = static_oscillator(1.0, w, 1.0)
    x, p = flow(spec, x0, p0, 1.0, steps=2000)
    e0, e1 = spec.h(x0, p0, 0.0), spec.h(x, p, 1.0)
    assert abs(e1 - e0) <= 1e-10 * max(1.0, e0)
