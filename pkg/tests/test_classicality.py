import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwork.classical import Delta, PhasePoint
from qwork.classicality import (
    classicality_report,
    coherent_epsilon_bound,
    coherent_epsilon_closed_form,
    coherent_epsilon_scaled,
    estimate_epsilon_a,
    estimate_epsilon_b,
    moment_table,
    weyl_expansion_residual,
    weyl_recursion_residual,
    words,
)
from qwork.errors import AllTermsSkipped, OrderTooHigh
from qwork.quantum import DensityMatrix, FockAlgebra, coherent_ket, coherent_state, dim_for_coherent


def _coherent_at(hbar, x0, p0, headroom=16):
    probe = FockAlgebra(2, hbar)
    alpha = probe.alpha_for(x0, p0)
    alg = FockAlgebra(dim_for_coherent(alpha, headroom=headroom), hbar)
    return coherent_ket(alpha, alg.dim), alg


def test_words_count():
    assert len(words(4)) == 31
    assert words(1) == ["", "X", "P"]


def test_first_order_ordering_term_is_exact():
    hbar, x0, p0 = 0.05, 1.0, 1.5
    ket, alg = _coherent_at(hbar, x0, p0)
    t = moment_table(ket, alg, 2)
    rel = (t[(1, 1)] - p0 * x0) / (p0 * x0)
    assert rel == pytest.approx(coherent_epsilon_closed_form(hbar, x0, p0, 1, 1), abs=1e-12)


def test_pure_ket_and_density_matrix_agree():
    alg = FockAlgebra(40, 0.5)
    ket = coherent_ket(1 + 0.5j, 40)
    rho = DensityMatrix.from_ket(ket)
    a = moment_table(ket, alg, 4)
    b = moment_table(rho, alg, 4)
    assert all(abs(a[k] - b[k]) <= 1e-12 * max(1, abs(a[k])) for k in a)


def test_epsilons_scale_linearly_with_hbar():
    eps_a, eps_b = [], []
    for hbar in (1e-2, 1e-3, 1e-4):
        ket, alg = _coherent_at(hbar, 1.0, 1.0)
        eps_a.append(estimate_epsilon_a(ket, alg, Delta(PhasePoint(1.0, 1.0)), 6)[0])
        eps_b.append(estimate_epsilon_b(ket, alg, 3)[0])
    for eps in (eps_a, eps_b):
        ratios = np.array(eps[:-1]) / np.array(eps[1:])
        assert np.all((ratios > 7) & (ratios < 13))


def test_report_defaults_to_point_mass_at_centre():
    rho = coherent_state(2 + 1j, FockAlgebra(60, 0.2))
    rep = classicality_report(rho, FockAlgebra(60, 0.2), max_order=4, max_degree=2)
    assert rep.epsilon_max == max(rep.epsilon_a, rep.epsilon_b)
    assert rep.max_order_checked == 4 and rep.max_degree_checked == 2
    assert 0 < rep.epsilon_a < 1 and 0 < rep.epsilon_b < 1


def test_vanishing_moments_are_reported_as_skipped():
    alg = FockAlgebra(40)
    eps, skipped = estimate_epsilon_a(coherent_ket(2.0, 40), alg, Delta(PhasePoint(0.0, 0.0)), 3)
    assert any(m % 2 == 1 and n == 0 for m, n, _ in skipped)  # odd P powers vanish for real alpha
    assert np.isfinite(eps)


def test_limits_and_all_skipped():
    alg = FockAlgebra(20)
    ket = coherent_ket(1.0, 20)
    with pytest.raises(OrderTooHigh):
        estimate_epsilon_a(ket, alg, Delta(PhasePoint(0, 0)), 9)
    with pytest.raises(OrderTooHigh):
        estimate_epsilon_b(ket, alg, 5)
    with pytest.raises(AllTermsSkipped):
        estimate_epsilon_a(ket, alg, Delta(PhasePoint(0, 0)), 2, denom_floor=1e9)
    with pytest.raises(AllTermsSkipped):
        estimate_epsilon_b(ket, alg, 1, denom_floor=1e9)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-4, 0.5), st.floats(0.2, 3), st.floats(0.2, 3), st.integers(1, 6), st.integers(1, 6))
def test_scaled_series_obeys_geometric_bound(hbar, x0, p0, n, m):
    val = abs(coherent_epsilon_scaled(hbar, x0, p0, n, m))
    assert val <= coherent_epsilon_bound(hbar, x0, p0, n, m) * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-2, 2),
    st.floats(-2, 2),
    st.floats(0.2, 1.5),
    st.integers(0, 4),
    st.integers(0, 4),
)
def test_star_product_reordering_holds(re, im, hbar, n, m):
    alg = FockAlgebra(90, hbar)
    rho = coherent_state(complex(re, im), alg)
    assert weyl_expansion_residual(n, m, alg, rho) <= 1e-7


def test_one_step_recursion_agrees_only_for_single_x_power():
    alg = FockAlgebra(80)
    rho = coherent_state(1.2 - 0.4j, alg)
    # first-order coefficient of the full expansion is n*m, the one-step form has n
    for n, m in [(1, 1), (3, 1), (5, 1), (0, 4), (4, 0)]:
        assert weyl_recursion_residual(n, m, alg, rho) <= 1e-9
    for n, m in [(1, 3), (2, 2), (3, 2)]:
        assert weyl_recursion_residual(n, m, alg, rho) > 1e-3
        assert weyl_expansion_residual(n, m, alg, rho) <= 1e-12
