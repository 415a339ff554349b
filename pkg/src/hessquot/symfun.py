"""Elementary symmetric functions, Garding cones and quotient invariants.

Everything here is a pure function of a spectrum (a real vector) or of the
positive diagonal of a matrix.  Indices ``i`` into a spectrum are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import AdmissibilityError, DivisionDomainError, IndexRangeError

#: Tolerance for the algebraic surface S_{k,l}(A) = 1.
TOL_MEMBERSHIP = 1e-9


@dataclass(frozen=True)
class QuotientIndices:
    """The triple (n, k, l) of a Hessian quotient operator sigma_k / sigma_l."""

    n: int
    k: int
    l: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"dimension n must be >= 3, got {self.n}")
        if not 0 <= self.l < self.k <= self.n:
            raise ValueError(f"need 0 <= l < k <= n, got (n,k,l)=({self.n},{self.k},{self.l})")

    @property
    def p(self) -> int:
        """Homogeneity degree k - l of the quotient."""
        return self.k - self.l

    @property
    def index_condition_holds(self) -> bool:
        if self.k >= self.l + 2:
            return self.l <= self.n - 3
        return self.l < self.n / 2 - 1

    @property
    def c_star(self) -> float:
        return c_star(self)

    def as_tuple(self):
        return (self.n, self.k, self.l)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue vector, stored sorted ascending."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SpdDiagonal:
    """Diagonal of a positive definite diagonal matrix A."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel().copy()
        if a.size == 0 or not np.all(a > 0):
            raise AdmissibilityError("diagonal entries of A must be strictly positive")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def spectrum(self) -> Spectrum:
        return Spectrum(self.a)

    @classmethod
    def isotropic(cls, n: int, value: float) -> "SpdDiagonal":
        return cls(np.full(n, float(value)))


def _values(lam) -> np.ndarray:
    if isinstance(lam, Spectrum):
        return lam.values
    if isinstance(lam, SpdDiagonal):
        return lam.a
    return np.asarray(lam, dtype=float).ravel()


def _esf_table(v: np.ndarray, jmax: int) -> np.ndarray:
    # e[j] after absorbing entries one at a time: e_j <- e_j + v_m e_{j-1}
    e = np.zeros(jmax + 1)
    e[0] = 1.0
    for x in v:
        e[1:] = e[1:] + x * e[:-1]
    return e


def sigma(j: int, lam) -> float:
    """j-th elementary symmetric polynomial of ``lam`` (sigma_0 = 1, sigma_{-1} = 0)."""
    v = _values(lam)
    n = v.size
    if j < -1 or j > n:
        raise IndexRangeError(f"sigma index j={j} outside [-1, {n}]")
    if j == -1:
        return 0.0
    return float(_esf_table(v, j)[j])


def sigma_all(lam) -> np.ndarray:
    """Array (sigma_0, ..., sigma_n) in one pass."""
    v = _values(lam)
    return _esf_table(v, v.size)


def sigma_reduced(j: int, i: int, lam) -> float:
    """sigma_j of ``lam`` with entry ``i`` (0-based) deleted, i.e. sigma_{j;i}."""
    v = _values(lam)
    n = v.size
    if not 0 <= i < n:
        raise IndexRangeError(f"entry index i={i} outside [0, {n - 1}]")
    if j < -1 or j > n - 1:
        raise IndexRangeError(f"reduced sigma index j={j} outside [-1, {n - 1}]")
    return sigma(j, np.delete(v, i))


def sigma_reduced_all(j: int, lam) -> np.ndarray:
    """Vector (sigma_{j;0}, ..., sigma_{j;n-1})."""
    v = _values(lam)
    if j == -1:
        return np.zeros(v.size)
    return np.array([sigma_reduced(j, i, v) for i in range(v.size)])


def in_gamma_k(k: int, lam) -> bool:
    """True iff sigma_j(lam) > 0 for every 1 <= j <= k."""
    v = _values(lam)
    if not 1 <= k <= v.size:
        raise IndexRangeError(f"cone index k={k} outside [1, {v.size}]")
    e = _esf_table(v, k)
    return bool(np.all(e[1 : k + 1] > 0))


def _check_dim(idx: QuotientIndices, v: np.ndarray):
    if v.size != idx.n:
        raise ValueError(f"spectrum has length {v.size}, expected n={idx.n}")


def quotient_value(idx: QuotientIndices, lam) -> float:
    """S_{k,l}(lam) = sigma_k / sigma_l, defined on Gamma_k only."""
    v = _values(lam)
    _check_dim(idx, v)
    e = _esf_table(v, idx.k)
    if not np.all(e[1 : idx.k + 1] > 0):
        raise AdmissibilityError(f"spectrum {v} is not in Gamma_{idx.k}")
    if e[idx.l] <= 0:
        raise DivisionDomainError("sigma_l <= 0")
    return float(e[idx.k] / e[idx.l])


def quotient_gradient(idx: QuotientIndices, lam) -> np.ndarray:
    """Analytic partials d(sigma_k/sigma_l)/d lambda_i, using d sigma_j / d lambda_i = sigma_{j-1;i}."""
    v = _values(lam)
    _check_dim(idx, v)
    if not in_gamma_k(idx.k, v):
        raise AdmissibilityError(f"spectrum {v} is not in Gamma_{idx.k}")
    sk, sl = sigma(idx.k, v), sigma(idx.l, v)
    dk = sigma_reduced_all(idx.k - 1, v)
    dl = sigma_reduced_all(idx.l - 1, v)
    return (dk * sl - sk * dl) / sl**2


def euler_weighted_gradient(idx: QuotientIndices, lam) -> float:
    """sum_i lambda_i dS/dlambda_i; equals (k - l) S by homogeneity."""
    v = _values(lam)
    return float(np.dot(v, quotient_gradient(idx, v)))


def _eigen_weights(j: int, a: np.ndarray) -> np.ndarray:
    # sigma_{j-1;i}(a) a_i / sigma_j(a); scale-invariant, so normalize first.
    b = a / a.max()
    return sigma_reduced_all(j - 1, b) * b / sigma(j, b)


def h_cap(k: int, A) -> float:
    """H_k(A) = max_i sigma_{k-1;i}(a) a_i / sigma_k(a)."""
    a = _values(A)
    if not 1 <= k <= a.size:
        raise IndexRangeError(f"k={k} outside [1, {a.size}]")
    if not np.all(a > 0):
        raise AdmissibilityError("A must be positive definite")
    return float(_eigen_weights(k, a).max())


def h_floor(l: int, A) -> float:
    """h_l(A) = min_i sigma_{l-1;i}(a) a_i / sigma_l(a), with h_0 := 0."""
    a = _values(A)
    if not 0 <= l <= a.size:
        raise IndexRangeError(f"l={l} outside [0, {a.size}]")
    if l == 0:
        return 0.0
    return float(_eigen_weights(l, a).min())


@dataclass(frozen=True)
class Membership:
    in_A: bool
    in_script_A: bool
    in_tilde_A: bool
    quotient: float
    H_k: float
    h_l: float


def membership(idx: QuotientIndices, A) -> Membership:
    """Classify A against the unit quotient surface and its two admissible subsets."""
    a = _values(A)
    _check_dim(idx, a)
    S = quotient_value(idx, a)
    Hk = h_cap(idx.k, a)
    hl = h_floor(idx.l, a)
    in_A = abs(S - 1.0) <= TOL_MEMBERSHIP
    half = idx.p / 2
    return Membership(
        in_A=in_A,
        in_script_A=in_A and Hk < half,
        in_tilde_A=in_A and Hk - hl < half,
        quotient=S,
        H_k=Hk,
        h_l=hl,
    )


def c_star(idx: QuotientIndices) -> float:
    """The isotropic constant with S_{k,l}(c* I) = 1."""
    n, k, l = idx.as_tuple()
    return (comb(n, l) / comb(n, k)) ** (1.0 / (k - l))


def scale_to_surface(idx: QuotientIndices, a) -> np.ndarray:
    """Rescale a positive vector so its quotient is exactly 1 (degree k - l homogeneity)."""
    a = np.asarray(a, dtype=float)
    return a * quotient_value(idx, a) ** (-1.0 / idx.p)


def script_H(idx: QuotientIndices, A) -> float:
    """The exponent (k - l) / (2 H_k(A)) of the variation-of-constants kernel."""
    return idx.p / (2.0 * h_cap(idx.k, A))
