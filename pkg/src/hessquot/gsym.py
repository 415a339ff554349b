"""Hessian invariants of generalized-symmetric functions u(x) = w(x^T A x / 2).

For diagonal A the Hessian is ``w' A + w'' (Ax)(Ax)^T`` and every sigma_m of its
spectrum has a two-term closed form.  ``dense_hessian_oracle`` forms the matrix
explicitly and diagonalizes it; it exists to cross-check the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np

from . import symfun
from .errors import AdmissibilityError, DomainError, NumericalError
from .symfun import QuotientIndices, Spectrum, SpdDiagonal


@dataclass(frozen=True)
class GSymProfile:
    """A scalar profile w(s) with derivatives, attached to a positive diagonal A.

    ``w``, ``dw`` and ``d2w`` take a float s > 0.  ``admissible_for`` is an
    optional cone index k the caller claims the profile lives in.
    """

    A: SpdDiagonal
    w: Callable[[float], float]
    dw: Callable[[float], float]
    d2w: Callable[[float], float]
    s_lo: float = 0.0
    s_hi: float = np.inf
    admissible_for: int | None = field(default=None)

    @property
    def n(self):
        return self.A.n

    def s_of(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * float(np.dot(self.A.a * x, x))

    def derivs(self, x):
        s = self.s_of(x)
        if s <= 0:
            raise DomainError("G-Sym profiles are not evaluated at x = 0")
        if not self.s_lo <= s <= self.s_hi:
            raise DomainError(f"s={s} outside profile domain [{self.s_lo}, {self.s_hi}]")
        return s, self.dw(s), self.d2w(s)

    def __call__(self, x) -> float:
        return self.w(self.s_of(x))


def sigma_closed(m: int, a: np.ndarray, x: np.ndarray, w1: float, w2: float) -> float:
    """sigma_m(a) w1^m + w2 w1^{m-1} sum_i sigma_{m-1;i}(a) (a_i x_i)^2."""
    if m == 0:
        return 1.0
    red = symfun.sigma_reduced_all(m - 1, a)
    ax2 = (a * x) ** 2
    return symfun.sigma(m, a) * w1**m + w2 * w1 ** (m - 1) * float(np.dot(red, ax2))


def sigma_of_gsym_hessian(m: int, p: GSymProfile, x) -> float:
    """sigma_m of the Hessian spectrum of the G-Sym function at x, by closed formula."""
    if not 1 <= m <= p.n:
        raise ValueError(f"m={m} outside [1, {p.n}]")
    x = np.asarray(x, dtype=float)
    _, w1, w2 = p.derivs(x)
    return sigma_closed(m, p.A.a, x, w1, w2)


def _quotient_closed(idx: QuotientIndices, a, x, w1, w2) -> float:
    for m in range(1, idx.k + 1):
        if sigma_closed(m, a, x, w1, w2) <= 0:
            raise AdmissibilityError(f"Hessian spectrum not in Gamma_{idx.k} (sigma_{m} <= 0)")
    return sigma_closed(idx.k, a, x, w1, w2) / sigma_closed(idx.l, a, x, w1, w2)


def quotient_of_gsym(idx: QuotientIndices, p: GSymProfile, x) -> float:
    """S_{k,l}(D^2 u) at x for u = w(x^T A x / 2)."""
    x = np.asarray(x, dtype=float)
    _, w1, w2 = p.derivs(x)
    return _quotient_closed(idx, p.A.a, x, w1, w2)


def is_k_convex_at(k: int, p: GSymProfile, x) -> bool:
    x = np.asarray(x, dtype=float)
    _, w1, w2 = p.derivs(x)
    return all(sigma_closed(m, p.A.a, x, w1, w2) > 0 for m in range(1, k + 1))


def one_sided_bound(idx: QuotientIndices, A, s: float, w1: float, w2: float) -> float:
    """S_{k,l}(A) [w1^{k-l} + 2 H_k(A) w2 w1^{k-l-1} s].

    A lower bound for the G-Sym quotient when w2 <= 0 and an upper bound when
    w2 >= 0 (given w1 > 0 and an admissible Hessian).  On the unit surface the
    prefactor is 1.
    """
    a = symfun._values(A)
    q = idx.p
    Hk = symfun.h_cap(idx.k, a)
    return symfun.quotient_value(idx, a) * (w1**q + 2.0 * Hk * w2 * w1 ** (q - 1) * s)


def dense_hessian(p: GSymProfile, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    _, w1, w2 = p.derivs(x)
    ax = p.A.a * x
    return w1 * np.diag(p.A.a) + w2 * np.outer(ax, ax)


def dense_hessian_oracle(p: GSymProfile, x) -> Spectrum:
    """Sorted eigenvalues of the explicitly assembled Hessian."""
    H = dense_hessian(p, x)
    try:
        vals = np.linalg.eigvalsh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"symmetric eigensolver did not converge: {exc}") from exc
    return Spectrum(vals)


def point_at_level(A, s: float, direction) -> np.ndarray:
    """The point on the ray through ``direction`` where x^T A x / 2 = s."""
    a = symfun._values(A)
    u = np.asarray(direction, dtype=float)
    return u * np.sqrt(2.0 * s / float(np.dot(a * u, u)))


def polynomial_profile(A, coeffs, s_lo=0.0, s_hi=np.inf) -> GSymProfile:
    """Profile w(s) = sum_j coeffs[j] s^j."""
    P = np.polynomial.Polynomial(coeffs)
    d1, d2 = P.deriv(1), P.deriv(2)
    A = A if isinstance(A, SpdDiagonal) else SpdDiagonal(A)
    return GSymProfile(A, lambda s: float(P(s)), lambda s: float(d1(s)), lambda s: float(d2(s)), s_lo, s_hi)


def _iso_coeffs(n: int, j: int, a: float):
    # sigma_j of (a w1 [n-1 times], a w1 + 2 a s w2) = alpha w1^j + beta s w1^{j-1} w2
    if j == 0:
        return 1.0, 0.0
    return comb(n, j) * a**j, 2.0 * a**j * comb(n - 1, j - 1)


def _iso_sigma(n, j, a, s, w1, w2):
    al, be = _iso_coeffs(n, j, a)
    if j == 0:
        return np.ones_like(w1), np.zeros_like(w1), np.zeros_like(w1)
    P = al * w1**j + be * s * w1 ** (j - 1) * w2
    dP1 = j * al * w1 ** (j - 1) + ((j - 1) * be * s * w1 ** (j - 2) * w2 if j >= 2 else 0.0 * w1)
    dP2 = be * s * w1 ** (j - 1)
    return P, dP1, dP2


def isotropic_operator(idx: QuotientIndices, a: float, s, w1, w2, derivatives: bool = False):
    """S_{k,l} of the Hessian of w(a |x|^2 / 2) in terms of (s, w', w'').

    The spectrum is (a w1, ..., a w1, a w1 + 2 a s w2).  Vectorized over nodes;
    with ``derivatives=True`` also returns the partials in w1 and w2.
    Admissibility is not checked here.
    """
    s, w1, w2 = (np.asarray(v, dtype=float) for v in (s, w1, w2))
    Pk, dk1, dk2 = _iso_sigma(idx.n, idx.k, a, s, w1, w2)
    Pl, dl1, dl2 = _iso_sigma(idx.n, idx.l, a, s, w1, w2)
    N = Pk / Pl
    if not derivatives:
        return N
    return N, (dk1 * Pl - Pk * dl1) / Pl**2, (dk2 * Pl - Pk * dl2) / Pl**2


def isotropic_admissible(idx: QuotientIndices, a: float, s, w1, w2) -> np.ndarray:
    """Per-node test that w1 > 0 and the nodal spectrum lies in Gamma_k."""
    s, w1, w2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (s, w1, w2)))
    ok = w1 > 0
    for j in range(1, idx.k + 1):
        P, _, _ = _iso_sigma(idx.n, j, a, s, w1, w2)
        ok &= P > 0
    return ok
