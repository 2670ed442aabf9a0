"""Moment-matching (epsilon_A) and commutator (epsilon_B) classicality estimates.

All expectations go through kets and the matrix-free Fock operators, so a
pure state at a truncation of 10^5 levels is as cheap as a small dense one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .classical import Delta, Gaussian, PhaseDistribution, PhasePoint, phase_moment
from .errors import AllTermsSkipped, DimensionMismatch, DomainError, OrderTooHigh
from .quantum import DensityMatrix, FockAlgebra

MAX_ORDER_A = 8
MAX_DEGREE_B = 4
MAX_WEYL_ORDER = 8


@dataclass(frozen=True)
class ClassicalityReport:
    epsilon_a: float
    epsilon_b: float
    max_order_checked: int
    max_degree_checked: int
    skipped_terms: tuple = field(default=())

    @property
    def epsilon_max(self) -> float:
        return max(self.epsilon_a, self.epsilon_b)


def _components(rho, algebra: FockAlgebra) -> list[tuple[float, np.ndarray]]:
    """(weight, ket) pairs whose mixture is ``rho``."""
    if isinstance(rho, DensityMatrix):
        if rho.dim != algebra.dim:
            raise DimensionMismatch(f"state dim {rho.dim} vs algebra dim {algebra.dim}")
        lam, vecs = np.linalg.eigh(rho.matrix)
        keep = lam > 1e-14
        return [(float(l), vecs[:, k]) for l, k in zip(lam[keep], np.nonzero(keep)[0])]
    v = np.asarray(rho, dtype=complex).ravel()
    if v.size != algebra.dim:
        raise DimensionMismatch(f"ket length {v.size} vs algebra dim {algebra.dim}")
    return [(1.0, v / np.linalg.norm(v))]


def _powers(apply, v: np.ndarray, top: int) -> list[np.ndarray]:
    out = [v]
    for _ in range(top):
        out.append(apply(out[-1]))
    return out


def moment_table(rho, algebra: FockAlgebra, max_order: int) -> dict[tuple[int, int], complex]:
    """Tr[P^m X^n rho] for all m + n <= max_order (P to the left, as written)."""
    table: dict[tuple[int, int], complex] = {}
    for lam, v in _components(rho, algebra):
        xs = _powers(algebra.apply_x, v, max_order)
        ps = _powers(algebra.apply_p, v, max_order)
        for m in range(max_order + 1):
            for n in range(max_order + 1 - m):
                # <v|P^m X^n|v> = (P^m v)^H (X^n v) since P is Hermitian
                table[(m, n)] = table.get((m, n), 0) + lam * np.vdot(ps[m], xs[n])
    return table


def centre(rho, algebra: FockAlgebra) -> PhasePoint:
    t = moment_table(rho, algebra, 1)
    return PhasePoint(float(t[(0, 1)].real), float(t[(1, 0)].real))


def _scale(rho, algebra: FockAlgebra) -> float:
    c = centre(rho, algebra)
    return max(abs(c.x), abs(c.p), math.sqrt(algebra.hbar_eff))


def estimate_epsilon_a(
    rho,
    algebra: FockAlgebra,
    dist: PhaseDistribution,
    max_order: int = MAX_ORDER_A,
    denom_floor: float | None = None,
) -> tuple[float, list[tuple[int, int, str]]]:
    """Largest |Tr[P^m X^n rho] - int p^m x^n rho_cl| / |Tr[P^m X^n rho]| over 1 <= m+n <= max_order.

    Pairs whose quantum moment falls below the floor are skipped and returned.
    """
    if max_order > MAX_ORDER_A:
        raise OrderTooHigh(f"max_order {max_order} exceeds {MAX_ORDER_A}")
    if max_order < 1:
        raise DomainError("max_order must be >= 1")
    table = moment_table(rho, algebra, max_order)
    scale = _scale(rho, algebra)
    eps, skipped = 0.0, []
    for m in range(max_order + 1):
        for n in range(max_order + 1 - m):
            if m + n == 0:
                continue
            q = table[(m, n)]
            floor = 1e-12 * scale ** (m + n) if denom_floor is None else denom_floor
            if abs(q) < floor:
                skipped.append((m, n, f"|Tr[P^{m} X^{n} rho]| = {abs(q):.3e} below floor {floor:.3e}"))
                continue
            eps = max(eps, abs(q - phase_moment(dist, m, n)) / abs(q))
    if len(skipped) == (max_order + 1) * (max_order + 2) // 2 - 1:
        raise AllTermsSkipped("every moment fell below the denominator floor")
    return float(eps), skipped


def words(max_len: int) -> list[str]:
    """All products of X and P up to ``max_len`` letters, shortest first ('' is the identity)."""
    out = [""]
    for k in range(1, max_len + 1):
        out.extend("".join(w) for w in itertools.product("XP", repeat=k))
    return out


def estimate_epsilon_b(
    rho,
    algebra: FockAlgebra,
    max_degree: int = MAX_DEGREE_B,
    denom_floor: float | None = None,
) -> tuple[float, list[tuple[str, str, str]]]:
    """hbar * max |<g_l g_r>| / |<g_l XP g_r>| (and with PX) over monomials g_l, g_r.

    Uses <g_l A g_r> = (g_l^dagger v)^H (A g_r v), with g^dagger the reversed word.
    """
    if max_degree > MAX_DEGREE_B:
        raise OrderTooHigh(f"max_degree {max_degree} exceeds {MAX_DEGREE_B}")
    ws = words(max_degree)
    degs = np.array([len(w) for w in ws])
    scale = _scale(rho, algebra)
    plain = np.zeros((len(ws), len(ws)), dtype=complex)
    with_xp = np.zeros_like(plain)
    with_px = np.zeros_like(plain)
    for lam, v in _components(rho, algebra):
        left = np.array([algebra.apply_word(w[::-1], v) for w in ws])
        right = np.array([algebra.apply_word(w, v) for w in ws])
        right_xp = np.array([algebra.apply_word("XP", r) for r in right])
        right_px = np.array([algebra.apply_word("PX", r) for r in right])
        lh = left.conj()
        plain += lam * (lh @ right.T)
        with_xp += lam * (lh @ right_xp.T)
        with_px += lam * (lh @ right_px.T)
    deg = degs[:, None] + degs[None, :] + 2
    floor = 1e-12 * scale**deg if denom_floor is None else np.full(deg.shape, float(denom_floor))
    eps, skipped, used = 0.0, [], 0
    for i, j in itertools.product(range(len(ws)), repeat=2):
        for label, denom in (("XP", with_xp[i, j]), ("PX", with_px[i, j])):
            if abs(denom) < floor[i, j]:
                skipped.append((ws[i] or "1", ws[j] or "1", f"|<g_l {label} g_r>| = {abs(denom):.3e} below floor"))
                continue
            used += 1
            eps = max(eps, abs(plain[i, j]) / abs(denom))
    if used == 0:
        raise AllTermsSkipped("every commutator denominator fell below the floor")
    return float(algebra.hbar_eff * eps), skipped


def classicality_report(
    rho,
    algebra: FockAlgebra,
    dist: PhaseDistribution | None = None,
    max_order: int = MAX_ORDER_A,
    max_degree: int = MAX_DEGREE_B,
) -> ClassicalityReport:
    """epsilon_A against ``dist`` (default: a point mass at the state centre) and epsilon_B."""
    dist = Delta(centre(rho, algebra)) if dist is None else dist
    eps_a, skip_a = estimate_epsilon_a(rho, algebra, dist, max_order)
    eps_b, skip_b = estimate_epsilon_b(rho, algebra, max_degree)
    skipped = tuple(("A",) + s for s in skip_a) + tuple(("B",) + s for s in skip_b)
    return ClassicalityReport(eps_a, eps_b, max_order, max_degree, skipped)


def _ratio(hbar_eff: float, x0: float, p0: float) -> float:
    if x0 * p0 == 0:
        raise DomainError("closed form needs x0*p0 != 0")
    return hbar_eff / (2 * abs(x0 * p0))


def coherent_epsilon_closed_form(hbar_eff: float, x0: float, p0: float, n: int, m: int) -> complex:
    """Leading relative ordering deviation of <P^n X^m> for a point-like coherent state.

    sum_{k=1}^{min(n,m)} n!/(n-k)! (-i r)^k with r = hbar / (2|x0 p0|).
    """
    r = _ratio(hbar_eff, x0, p0)
    return complex(sum(math.perm(n, k) * (-1j * r) ** k for k in range(1, min(n, m) + 1)))


def coherent_epsilon_scaled(hbar_eff: float, x0: float, p0: float, n: int, m: int) -> complex:
    """The same series with n! divided out: sum_{k=1}^{min(n,m)} (-i r)^k / (n-k)!."""
    r = _ratio(hbar_eff, x0, p0)
    return complex(sum((-1j * r) ** k / math.factorial(n - k) for k in range(1, min(n, m) + 1)))


def coherent_epsilon_bound(hbar_eff: float, x0: float, p0: float, n: int, m: int) -> float:
    """Geometric bound r (1 - r^{n_min}) / (1 - r) on the scaled series."""
    r = _ratio(hbar_eff, x0, p0)
    k = min(n, m)
    if r == 1:
        return float(k)
    return r * (1 - r**k) / (1 - r)


# moments below this fraction of their Cauchy-Schwarz bound count as vanishing
VANISHING = 1e-8


def schwarz_bound(n: int, m: int, algebra: FockAlgebra, rho) -> float:
    """|Tr[P^n X^m rho]| <= sum_k lam_k ||P^n v_k|| ||X^m v_k||."""
    total = 0.0
    for lam, v in _components(rho, algebra):
        pv = _powers(algebra.apply_p, v, n)[-1]
        xv = _powers(algebra.apply_x, v, m)[-1]
        total += lam * float(np.linalg.norm(pv) * np.linalg.norm(xv))
    return total


def wigner_moment(n: int, m: int, algebra: FockAlgebra, centre_point: PhasePoint) -> float:
    """Integral of p^n q^m against the coherent-state Gaussian Wigner function."""
    dist = Gaussian(centre_point, algebra.x_scale, algebra.p_scale)
    return phase_moment(dist, n, m)


def weyl_moment(n: int, m: int, algebra: FockAlgebra, rho) -> tuple[complex, float]:
    """(Tr[P^n X^m rho], Gaussian Wigner moment of p^n q^m) for a coherent state."""
    if n < 0 or m < 0:
        raise DomainError("orders must be non-negative")
    if n + m > MAX_WEYL_ORDER:
        raise OrderTooHigh(f"order {n + m} exceeds {MAX_WEYL_ORDER}")
    table = moment_table(rho, algebra, n + m)
    c = PhasePoint(float(table[(0, 1)].real) if n + m else 0.0, float(table[(1, 0)].real) if n + m else 0.0)
    return complex(table[(n, m)]), wigner_moment(n, m, algebra, c)


def weyl_recursion_residual(n: int, m: int, algebra: FockAlgebra, rho) -> float:
    """Relative residual of <P^n X^m> - W_{n,m} = -(n i hbar/2) <P^{n-1} X^{m-1}>.

    Terms with n = 0 or m = 0 have no reordering, so the right side is zero there.
    The residual is scaled by the largest of the three moments involved, floored
    at a small multiple of the Cauchy-Schwarz bound so vanishing moments do not
    turn round-off into an O(1) relative error.
    """
    q, w = weyl_moment(n, m, algebra, rho)
    rhs = 0j
    if n > 0 and m > 0:
        rhs = -0.5j * n * algebra.hbar_eff * weyl_moment(n - 1, m - 1, algebra, rho)[0]
    return abs((q - w) - rhs) / max(abs(q), abs(w), abs(rhs), VANISHING * schwarz_bound(n, m, algebra, rho))


def weyl_expansion_residual(n: int, m: int, algebra: FockAlgebra, rho) -> float:
    """Relative residual of the full reordering expansion

    <P^n X^m> = sum_k k! C(n,k) C(m,k) (-i hbar/2)^k W_{n-k,m-k},

    i.e. the Weyl symbol of P^n X^m written as a star product p^n * q^m.
    The residual is scaled by the sum of the term magnitudes, which stays
    meaningful when the moment itself vanishes (e.g. odd moments at p0 = 0),
    with the same Cauchy-Schwarz floor as above.
    """
    q, _ = weyl_moment(n, m, algebra, rho)
    c = centre(rho, algebra)
    total, size = 0j, 0.0
    for k in range(min(n, m) + 1):
        coeff = math.factorial(k) * math.comb(n, k) * math.comb(m, k) * (-0.5j * algebra.hbar_eff) ** k
        term = coeff * wigner_moment(n - k, m - k, algebra, c)
        total += term
        size += abs(term)
    return abs(q - total) / max(abs(q), size, VANISHING * schwarz_bound(n, m, algebra, rho))
