"""Dense Hermitian linear algebra and the special functions behind the oscillator closed forms.

The Airy functions are evaluated from their confluent-hypergeometric-limit
representation, so everything here is a finite power series plus Gamma
constants. The representation is only trusted on |z| <= 10.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NoConvergence, NotHermitian

HERMITIAN_RTOL = 1e-10
AIRY_ZMAX = 10.0


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with orthonormal eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DomainError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hermiticity_residual(h: np.ndarray) -> float:
    return max_abs(h - h.conj().T)


def check_hermitian(h, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise NotHermitian(f"matrix is not square: {h.shape}")
    scale = max_abs(h)
    if hermiticity_residual(h) > rtol * max(scale, 1e-300):
        raise NotHermitian(f"asymmetry {hermiticity_residual(h):.3e} exceeds {rtol:g}*|H|max")
    return h


def hermitian_eig(h) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    h = check_hermitian(h)
    h = 0.5 * (h + h.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return Spectrum(w, v)


def unitary_exp(h, theta: float) -> np.ndarray:
    """exp(-i*theta*H) through the spectral decomposition of H."""
    spec = hermitian_eig(h)
    v = spec.eigenvectors
    return (v * np.exp(-1j * theta * spec.eigenvalues)) @ v.conj().T


def cluster_sorted(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group indices of ascending ``values`` whose consecutive gaps are <= tol."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    cuts = np.nonzero(np.diff(values) > tol)[0] + 1
    return np.split(np.arange(values.size), cuts)


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise DomainError(f"gamma_fn needs x > 0, got {x}")
    return math.gamma(x)


SERIES_DIGITS = 60
# stop once a term is this small relative to the running sum (extended precision)
SERIES_RTOL = Decimal("1e-45")


def _hyp0f1_decimal(a: Decimal, theta: Decimal, max_terms: int) -> Decimal:
    term = Decimal(1)
    total = Decimal(1)
    for n in range(max_terms):
        term = term * theta / ((a + n) * (n + 1))
        total += term
        # only stop once the terms are past their peak
        if abs(theta) < abs(a + n) * (n + 1) and abs(term) <= SERIES_RTOL * abs(total):
            return total
    raise NoConvergence(f"0F1({a};{theta}) not converged after {max_terms} terms")


def hyp0f1(a: float, theta: float, max_terms: int = 500) -> float:
    """Confluent hypergeometric limit function 0F1(;a;theta) by direct summation.

    Terms are accumulated with 60 significant digits, so the alternating
    cancellation for large negative theta does not eat the double result.
    """
    if a <= 0 and float(a).is_integer():
        raise DomainError(f"0F1 undefined for non-positive integer a={a}")
    with localcontext() as ctx:
        ctx.prec = SERIES_DIGITS
        return float(_hyp0f1_decimal(Decimal(a), Decimal(theta), max_terms))


class AiryValues(NamedTuple):
    ai: float
    bi: float
    aip: float
    bip: float


# 1/(3^(2/3) G(2/3)), 1/(3^(1/3) G(1/3)), 1/(3^(1/6) G(2/3)), 3^(1/6)/G(1/3) to 55 digits
_C_AI_F = Decimal("0.3550280538878172392600631860041831763979791741991772406")
_C_AI_G = Decimal("0.2588194037928067984051835601892039634790911383549345822")
_C_BI_F = Decimal("0.614926627446000735150922369093613553594728188648596505")
_C_BI_G = Decimal("0.4482883573538263579148237103988283908662267992122620611")


def airy_constants() -> tuple[float, float, float, float]:
    """The four Gamma-function prefactors of the 0F1 representation, as doubles."""
    return float(_C_AI_F), float(_C_AI_G), float(_C_BI_F), float(_C_BI_G)


def airy(z: float, max_terms: int = 500) -> AiryValues:
    """Ai, Bi and their derivatives from the 0F1 representation.

    With f = 0F1(2/3; z^3/9) and g = 0F1(4/3; z^3/9),
    Ai = f/(3^(2/3) G(2/3)) - z g/(3^(1/3) G(1/3)) and
    Bi = f/(3^(1/6) G(2/3)) + 3^(1/6) z g/G(1/3).
    Derivatives use d/dtheta 0F1(a; theta) = 0F1(a+1; theta)/a.
    The two branches cancel strongly for z > 0, so everything is combined
    in extended precision before rounding.
    """
    z = float(z)
    if not abs(z) <= AIRY_ZMAX:
        raise DomainError(f"airy series only validated for |z| <= {AIRY_ZMAX}, got {z}")
    with localcontext() as ctx:
        ctx.prec = SERIES_DIGITS
        zd = Decimal(z)
        theta = zd**3 / 9
        three = Decimal(3)
        f = _hyp0f1_decimal(2 / three, theta, max_terms)
        g = _hyp0f1_decimal(4 / three, theta, max_terms)
        # d theta/dz = z^2/3
        fp = zd * zd / 2 * _hyp0f1_decimal(5 / three, theta, max_terms)
        gp = zd * zd / 4 * _hyp0f1_decimal(7 / three, theta, max_terms)
        zg = zd * g
        zg_p = g + zd * gp
        return AiryValues(
            ai=float(_C_AI_F * f - _C_AI_G * zg),
            bi=float(_C_BI_F * f + _C_BI_G * zg),
            aip=float(_C_AI_F * fp - _C_AI_G * zg_p),
            bip=float(_C_BI_F * fp + _C_BI_G * zg_p),
        )
