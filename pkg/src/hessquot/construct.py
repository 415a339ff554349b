"""Explicit G-Sym subsolution and supersolution families.

The subsolution profile solves

    (w')^p + 2 H_k(A) w'' (w')^{p-1} s = gbar(s),   gbar(s) = 1 + C0 s^{-beta/2},

with p = k - l, by variation of constants:

    w'(s)^p = s^{-H} ( int_1^s H t^{H-1} gbar(t) dt + c1 ),   H = p / (2 H_k(A)),

and the supersolution does the same with a lower envelope g_under and c1 = 0.
Both profiles are written as ``w(s) = s + mu - T(s)`` where T is the tail
integral of (w' - 1) from s to infinity.  Tails are computed as adaptive
quadrature up to a cutoff plus the closed-form leading term beyond it.

Throughout, ``phi(delta, L) = expm1(delta L) / delta`` (equal to L at delta = 0)
so that the two branches H != beta/2 and H = beta/2 are one formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, optimize

from . import gsym, symfun
from .errors import (
    AdmissibilityError,
    DivergenceError,
    FitRangeError,
    RangeError,
    ThresholdError,
)
from .symfun import QuotientIndices, SpdDiagonal

BRANCH_EPS = 1e-9
SAFETY_PAD = 1e-8


def phi(delta: float, L):
    """(exp(delta L) - 1) / delta, with the log branch L for |delta| <= BRANCH_EPS."""
    L = np.asarray(L, dtype=float)
    if abs(delta) <= BRANCH_EPS:
        return L
    return np.expm1(delta * L) / delta


class Quadrature(NamedTuple):
    value: float
    error: float


# ---------------------------------------------------------------------------
# Source envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceEnvelope:
    """Right-hand side g and its radial envelopes.

    ``g`` maps a point x (shape (n,)) to a positive float; ``None`` means
    g == 1.  For s >= s0 the caller guarantees
    ``1 - C0 s^{-beta/2} <= g(x) <= 1 + C0 s^{-beta/2}``, and ``g_inf``,
    ``g_sup`` bound g on the whole exterior domain.
    """

    C0: float
    beta: float
    s0: float
    g: Callable | None = None
    g_inf: float | None = None
    g_sup: float | None = None

    def __post_init__(self):
        if self.C0 < 0:
            raise ValueError("C0 must be non-negative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.s0 < 1:
            raise ValueError("envelope onset s0 must be >= 1")
        if 1.0 - self.C0 * self.s0 ** (-self.beta / 2) <= 0:
            raise ValueError("1 - C0 s0^{-beta/2} must be positive")
        if self.g is None:
            object.__setattr__(self, "g_inf", 1.0 if self.g_inf is None else self.g_inf)
            object.__setattr__(self, "g_sup", 1.0 if self.g_sup is None else self.g_sup)
        elif self.g_inf is None or self.g_sup is None:
            raise ValueError("g_inf and g_sup are required when g is given")
        if self.g_inf <= 0:
            raise ValueError("inf g must be positive")
        object.__setattr__(self, "_blend", self._make_blend())

    # lower-envelope construction: constant q on [1, s_b], monotone cubic
    # Hermite on [s_b, s0], then 1 - C0 s^{-beta/2}.
    def _make_blend(self):
        s0 = self.s0
        s_b = max(1.0, s0 / 2)
        h0 = self._h(s0)
        if s_b >= s0:
            return None
        dh = self.C0 * (self.beta / 2) * s0 ** (-self.beta / 2 - 1)
        width = s0 - s_b
        q = min(self.g_inf, h0)
        m1 = dh
        if m1 * width > 3 * (h0 - q):
            q_c1 = h0 - m1 * width / 3
            if q_c1 > 0:
                q = q_c1
            else:
                q = q / 2
                m1 = 3 * (h0 - q) / width
        # Hermite basis in t = (s - s_b)/width, start slope 0
        t = np.polynomial.Polynomial
        P = q * t([1, 0, -3, 2]) + h0 * t([0, 0, 3, -2]) + width * m1 * t([0, 0, -1, 1])
        P_s = P(t([-s_b / width, 1 / width]))
        return {"s_b": s_b, "q": q, "poly": P_s}

    def _h(self, s):
        return 1.0 - self.C0 * np.asarray(s, dtype=float) ** (-self.beta / 2)

    def g_bar(self, s):
        return 1.0 + self.C0 * np.asarray(s, dtype=float) ** (-self.beta / 2)

    def g_under(self, s):
        s = np.asarray(s, dtype=float)
        out = self._h(s)
        b = self._blend
        if b is None:
            return out
        out = np.where(s <= b["s_b"], b["q"], out)
        mid = (s > b["s_b"]) & (s < self.s0)
        return np.where(mid, b["poly"](s), out)

    def g_under_integral(self, s: float, H: float) -> float:
        """int_1^s H t^{H-1} g_under(t) dt in closed form (s >= 1)."""
        b = self._blend
        delta = H - self.beta / 2
        if b is None:
            return math.expm1(H * math.log(s)) - self.C0 * H * float(phi(delta, math.log(s)))
        s_b, q = b["s_b"], b["q"]
        if s <= s_b:
            return q * math.expm1(H * math.log(s))
        base = q * math.expm1(H * math.log(s_b))

        def cubic_part(upper):
            c = b["poly"].coef
            return sum(cj * H * (upper ** (H + j) - s_b ** (H + j)) / (H + j) for j, cj in enumerate(c))

        if s <= self.s0:
            return base + cubic_part(s)
        I0 = base + cubic_part(self.s0)
        s0 = self.s0
        return I0 + (s**H - s0**H) - self.C0 * H * s0**delta * float(phi(delta, math.log(s / s0)))

    def evaluate_g(self, x) -> float:
        if self.g is None:
            return 1.0
        return float(self.g(np.asarray(x, dtype=float)))


def oscillating_source(A, C0: float, beta: float, s0: float, amplitude: float = 1.0) -> SourceEnvelope:
    """A concrete non-radial g with the envelope property relative to A.

    g(x) = 1 + amplitude C0 max(s, s0)^{-beta/2} sin(3 x_1 + x_2),  s = x^T A x / 2.
    """
    a = np.asarray(symfun._values(A), dtype=float)
    if not 0 <= amplitude <= 1:
        raise ValueError("amplitude must lie in [0, 1]")

    def g(x):
        x = np.asarray(x, dtype=float)
        s = 0.5 * float(np.dot(a * x, x))
        return 1.0 + amplitude * C0 * max(s, s0) ** (-beta / 2) * math.sin(3 * x[0] + x[1])

    bound = amplitude * C0 * s0 ** (-beta / 2)
    return SourceEnvelope(C0, beta, s0, g=g, g_inf=1.0 - bound, g_sup=1.0 + bound)


def radial_source(C0: float, beta: float, s0: float, A, sign: float = 1.0) -> SourceEnvelope:
    """g(x) = 1 + sign C0 max(s, s0)^{-beta/2}: radial in s, used by the radial pipeline."""
    a = np.asarray(symfun._values(A), dtype=float)

    def g(x):
        x = np.asarray(x, dtype=float)
        s = 0.5 * float(np.dot(a * x, x))
        return 1.0 + sign * C0 * max(s, s0) ** (-beta / 2)

    bound = C0 * s0 ** (-beta / 2)
    lo, hi = (1.0, 1.0 + bound) if sign > 0 else (1.0 - bound, 1.0)
    return SourceEnvelope(C0, beta, s0, g=g, g_inf=lo, g_sup=hi)


def inner_antiderivative(H: float, env: SourceEnvelope, s):
    """int_1^s H t^{H-1} gbar(t) dt = s^H - 1 + C0 H phi(H - beta/2, ln s)."""
    s = np.asarray(s, dtype=float)
    L = np.log(s)
    out = np.expm1(H * L) + env.C0 * H * phi(H - env.beta / 2, L)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# tail machinery shared by both families
# ---------------------------------------------------------------------------


class _Tail:
    """w'(s)^p = 1 + d(s), d(s) = s^{-H} [E + Q phi(delta, ln(s / sigma))], for s >= sigma."""

    def __init__(self, H, p, beta, E, Q, sigma):
        self.H, self.p, self.beta = H, p, beta
        self.E, self.Q, self.sigma = E, Q, sigma
        self.delta = H - beta / 2
        self.h = H - 1.0
        self.b = beta / 2 - 1.0
        if self.h <= 0 or self.b <= 0:
            raise DivergenceError("tail integral diverges unless H > 1 and beta > 2")

    def d(self, s):
        s = np.asarray(s, dtype=float)
        return s ** (-self.H) * (self.E + self.Q * phi(self.delta, np.log(s / self.sigma)))

    def w1m1(self, s):
        return np.expm1(np.log1p(self.d(s)) / self.p)

    def lead(self, S: float) -> float:
        """Closed form of int_S^inf d(s)/p ds."""
        h, b = self.h, self.b
        L = math.log(S / self.sigma)
        pw = S ** (1 - self.H)
        part_E = self.E * pw / h
        part_Q = self.Q * pw * (h * float(phi(self.delta, L)) + 1.0) / (b * h)
        return (part_E + part_Q) / self.p

    def _bound_sq_integral(self, S: float) -> float:
        # int_S^inf d^2 <= 2 E^2 int s^{-2H} + 2 Q^2 int B^2
        H, delta, sig = self.H, self.delta, self.sigma
        r = 2 * H - 1
        e_part = S ** (-r) / r
        if delta < -BRANCH_EPS:
            q_part = S ** (-r) / (r * delta**2)
        else:
            # B(s) = s^{-H} ln(s/sig) (s/sig)^delta, B^2 = sig^{-2 delta} s^{-(r+1) + 2 delta} L^2
            rr = r - 2 * max(delta, 0.0)
            L = math.log(S / sig)
            q_part = sig ** (-2 * max(delta, 0.0)) * S ** (-rr) * (L * L / rr + 2 * L / rr**2 + 2 / rr**3)
        return 2 * self.E**2 * e_part + 2 * self.Q**2 * q_part

    def remainder_bound(self, S: float) -> float:
        if self.p == 1:
            return 0.0
        dS = abs(float(self.d(S)))
        if dS > 0.25:
            return math.inf
        c2 = (1.0 / self.p) * (1 - 1.0 / self.p) / 2 * 4.0
        return c2 * self._bound_sq_integral(S)

    def tail(self, s: float) -> Quadrature:
        """int_s^inf (w' - 1) with an error estimate."""
        s = float(s)
        scale = abs(self.lead(s)) + 1e-300
        S = 10.0 * s
        if self.p > 1:
            for _ in range(40):
                if S >= self.sigma * math.exp(2.0 / self.beta + 1) and self.remainder_bound(S) <= 1e-12 * scale:
                    break
                S *= 10.0
        rem = self.remainder_bound(S)
        val, err = integrate.quad(
            lambda u: float(self.w1m1(math.exp(u))) * math.exp(u),
            math.log(s),
            math.log(S),
            epsabs=1e-15 * scale,
            epsrel=1e-12,
            limit=400,
        )
        total = val + self.lead(S)
        roundoff = 64 * np.finfo(float).eps * (abs(val) + abs(self.lead(S)))
        return Quadrature(total, err + rem + roundoff)


# ---------------------------------------------------------------------------
# Subsolution family
# ---------------------------------------------------------------------------


def _as_diag(A) -> SpdDiagonal:
    return A if isinstance(A, SpdDiagonal) else SpdDiagonal(A)


def _validate(idx: QuotientIndices, A: SpdDiagonal, env: SourceEnvelope):
    if A.n != idx.n:
        raise ValueError(f"A has dimension {A.n}, indices say n={idx.n}")
    mem = symfun.membership(idx, A)
    if not mem.in_script_A:
        raise AdmissibilityError(
            f"A is not in the admissible set (S={mem.quotient:.12g}, H_k={mem.H_k:.6g}, (k-l)/2={idx.p / 2})"
        )
    if env.beta <= 2:
        raise DivergenceError("beta must exceed 2")
    return mem


def threshold_c1(idx: QuotientIndices, A, env: SourceEnvelope, *, conservative: bool = False) -> float:
    """Lower threshold for c1 making G(s) > 0 (hence w'' < 0) on [1, inf).

    G(s) = c1 - 1 + C0 H phi(H - beta/2, ln s) - C0 s^{H - beta/2} is
    nondecreasing on [1, inf) in every branch, so its infimum is
    G(1) = c1 - 1 - C0.  ``conservative=True`` additionally requires the s -> inf
    limit c1 - 1 + C0 H / (beta/2 - H) to be positive when H < beta/2.
    """
    A = _as_diag(A)
    H = symfun.script_H(idx, A)
    C = 1.0 + env.C0
    if conservative and H < env.beta / 2 - BRANCH_EPS:
        C = max(C, 1.0 + env.C0 * H / (env.beta / 2 - H))
    return C + SAFETY_PAD


class SubFamily:
    """The profile w_{c1,c2}(s) = c2 + int_{s0}^s w'(eta) d eta."""

    def __init__(self, idx: QuotientIndices, A, env: SourceEnvelope, c1: float, c2: float = 0.0):
        self.idx, self.A, self.env = idx, _as_diag(A), env
        mem = _validate(idx, self.A, env)
        self.Hk = mem.H_k
        self.H = idx.p / (2 * self.Hk)
        self.C_tilde = threshold_c1(idx, self.A, env)
        # C0 = 0, c1 = 1 is the exact linear member w = s + const (w'' = 0)
        linear = env.C0 == 0 and c1 == 1
        if c1 <= self.C_tilde and not linear:
            raise ThresholdError(f"c1={c1} must exceed the threshold {self.C_tilde}")
        self.c1, self.c2 = float(c1), float(c2)
        self._tail = _Tail(self.H, idx.p, env.beta, E=self.c1 - 1.0, Q=env.C0 * self.H, sigma=1.0)
        t0 = self._tail.tail(env.s0)
        self.mu = self.c2 - env.s0 + t0.value
        self.mu_error = t0.error

    @property
    def s0(self):
        return self.env.s0

    def _check_s(self, s):
        if np.any(np.asarray(s) < 1.0):
            raise ValueError("subsolution profile is defined for s >= 1")

    def G(self, s):
        s = np.asarray(s, dtype=float)
        env, H = self.env, self.H
        delta = H - env.beta / 2
        out = self.c1 - 1.0 + env.C0 * H * phi(delta, np.log(s)) - env.C0 * s**delta
        return out if out.ndim else float(out)

    def w1(self, s):
        self._check_s(s)
        out = np.exp(np.log1p(self._tail.d(s)) / self.idx.p)
        return out if np.ndim(out) else float(out)

    def w2(self, s):
        s = np.asarray(s, dtype=float)
        w1 = self.w1(s)
        out = -(s ** (-self.H - 1) / (2 * self.Hk)) * w1 ** (1 - self.idx.p) * self.G(s)
        return out if np.ndim(out) else float(out)

    def tail(self, s: float) -> Quadrature:
        self._check_s(s)
        return self._tail.tail(s)

    def w(self, s):
        if np.ndim(s):
            return np.array([self.w(v) for v in np.asarray(s, dtype=float)])
        return float(s) + self.mu - self.tail(s).value

    def ode_residual(self, s) -> float:
        """(w')^p + 2 H_k w'' (w')^{p-1} s - gbar(s), evaluated without cancellation."""
        s = float(s)
        d = float(self._tail.d(s))
        return d - s ** (-self.H) * self.G(s) - self.env.C0 * s ** (-self.env.beta / 2)

    def ode_lhs(self, s) -> float:
        w1, w2, p = self.w1(s), self.w2(s), self.idx.p
        return w1**p + 2 * self.Hk * w2 * w1 ** (p - 1) * s

    def profile(self) -> gsym.GSymProfile:
        return gsym.GSymProfile(self.A, self.w, self.w1, self.w2, 1.0, np.inf, admissible_for=self.idx.k)

    def with_c2(self, c2: float) -> "SubFamily":
        return SubFamily(self.idx, self.A, self.env, self.c1, c2)

    def to_record(self) -> dict:
        return {
            "kind": "sub",
            "n": self.idx.n,
            "k": self.idx.k,
            "l": self.idx.l,
            "a": [float(v) for v in self.A.a],
            "C0": self.env.C0,
            "beta": self.env.beta,
            "s0": self.env.s0,
            "c1": self.c1,
            "c2": self.c2,
            "mu": self.mu,
        }


def sub_w_prime(f: SubFamily, s: float):
    """(w', w'') of the subsolution profile."""
    return f.w1(s), f.w2(s)


def mu_sub(f: SubFamily) -> Quadrature:
    """mu(c1, c2) = c2 - s0 + int_{s0}^inf (w' - 1), with its error estimate."""
    return Quadrature(f.mu, f.mu_error)


def mu_of_c1(idx, A, env, c1: float, c2: float) -> float:
    return SubFamily(idx, A, env, c1, c2).mu


def default_alpha(idx, A, env) -> float:
    return threshold_c1(idx, A, env) + 1.0


def invert_c1(idx: QuotientIndices, A, env: SourceEnvelope, m_s0: float, c: float, alpha: float | None = None) -> float:
    """Solve mu(c1, m_s0) = c for c1 on [alpha, inf) (mu is strictly increasing in c1)."""
    alpha = default_alpha(idx, A, env) if alpha is None else alpha

    def F(c1):
        return mu_of_c1(idx, A, env, c1, m_s0) - c

    f_lo = F(alpha)
    if f_lo >= 0:
        raise RangeError(f"c={c} is not above mu(alpha, m_s0)={f_lo + c}")
    lo, hi = alpha, 2 * alpha
    f_hi = F(hi)
    while f_hi <= 0:
        lo, hi = hi, 2 * hi
        f_hi = F(hi)
        if hi > 1e300:
            raise RangeError("could not bracket c1(c)")
    root = optimize.brentq(F, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(root)


# ---------------------------------------------------------------------------
# Supersolution family
# ---------------------------------------------------------------------------


class SuperFamily:
    """The profile wbar_{c2}(s) = c2 + int_1^s w'(eta) d eta built from g_under with c1 = 0."""

    def __init__(self, idx: QuotientIndices, A, env: SourceEnvelope, c2: float = 0.0):
        self.idx, self.A, self.env = idx, _as_diag(A), env
        mem = _validate(idx, self.A, env)
        self.Hk = mem.H_k
        self.H = idx.p / (2 * self.Hk)
        self.c2 = float(c2)
        H, s0 = self.H, env.s0
        I0 = env.g_under_integral(s0, H)
        self._tail = _Tail(
            H, idx.p, env.beta, E=I0 - s0**H, Q=-env.C0 * H * s0 ** (H - env.beta / 2), sigma=s0
        )
        total = self._tail_from(1.0)
        self.deficit = total.value
        self.mu = self.c2 - 1.0 + total.value
        self.mu_error = total.error

    def I(self, s: float) -> float:
        return self.env.g_under_integral(float(s), self.H)

    def _w1_scalar(self, s: float) -> float:
        if s < 1.0:
            raise ValueError("supersolution profile is defined for s >= 1")
        if s >= self.env.s0:
            with np.errstate(divide="ignore"):  # d = -1 at s = s0 = 1
                return float(np.exp(np.log1p(self._tail.d(s)) / self.idx.p))
        val = s ** (-self.H) * self.I(s)
        return max(val, 0.0) ** (1.0 / self.idx.p)

    def w1(self, s):
        if np.ndim(s):
            return np.array([self._w1_scalar(float(v)) for v in np.ravel(s)]).reshape(np.shape(s))
        return self._w1_scalar(float(s))

    def Gbar(self, s: float) -> float:
        """I(s) - s^H g_under(s) (negative on [1, inf))."""
        env, H = self.env, self.H
        if s >= env.s0:
            return (
                self._tail.E
                + self._tail.Q * float(phi(self._tail.delta, math.log(s / env.s0)))
                + env.C0 * s ** (H - env.beta / 2)
            )
        return self.I(s) - s**H * float(env.g_under(s))

    def _w2_scalar(self, s: float) -> float:
        w1 = self._w1_scalar(s)
        p = self.idx.p
        if w1 == 0.0:
            if p == 1:
                return -(s ** (-self.H - 1) / (2 * self.Hk)) * self.Gbar(s)
            return math.inf
        return -(s ** (-self.H - 1) / (2 * self.Hk)) * w1 ** (1 - p) * self.Gbar(s)

    def w2(self, s):
        if np.ndim(s):
            return np.array([self._w2_scalar(float(v)) for v in np.ravel(s)]).reshape(np.shape(s))
        return self._w2_scalar(float(s))

    def _tail_from(self, s: float) -> Quadrature:
        s0 = self.env.s0
        if s >= s0:
            return self._tail.tail(s)
        upper = self._tail.tail(s0)
        val, err = integrate.quad(lambda t: self._w1_scalar(t) - 1.0, s, s0, epsabs=1e-14, epsrel=1e-12, limit=400)
        return Quadrature(upper.value + val, upper.error + err)

    def tail(self, s: float) -> Quadrature:
        return self._tail_from(float(s))

    def w(self, s):
        if np.ndim(s):
            return np.array([self.w(v) for v in np.asarray(s, dtype=float)])
        return float(s) + self.mu - self.tail(s).value

    def ode_residual(self, s) -> float:
        s = float(s)
        w1 = self._w1_scalar(s)
        lhs_minus_1 = (
            float(self._tail.d(s)) if s >= self.env.s0 else w1**self.idx.p - 1.0
        ) - s ** (-self.H) * self.Gbar(s)
        return lhs_minus_1 - (float(self.env.g_under(s)) - 1.0)

    def ode_lhs(self, s) -> float:
        w1, w2, p = self.w1(s), self.w2(s), self.idx.p
        return w1**p + 2 * self.Hk * w2 * w1 ** (p - 1) * s

    def profile(self) -> gsym.GSymProfile:
        # s = 1 is boundary-degenerate (w' = 0 there)
        return gsym.GSymProfile(self.A, self.w, self.w1, self.w2, 1.0, np.inf, admissible_for=self.idx.k)

    def with_c2(self, c2: float) -> "SuperFamily":
        return SuperFamily(self.idx, self.A, self.env, c2)

    def to_record(self) -> dict:
        return {
            "kind": "super",
            "n": self.idx.n,
            "k": self.idx.k,
            "l": self.idx.l,
            "a": [float(v) for v in self.A.a],
            "C0": self.env.C0,
            "beta": self.env.beta,
            "s0": self.env.s0,
            "c1": 0.0,
            "c2": self.c2,
            "mu": self.mu,
        }


def super_w(f: SuperFamily, s: float):
    """(wbar, wbar', wbar'') at s."""
    return f.w(s), f.w1(s), f.w2(s)


class SuperInversion(NamedTuple):
    mu_bar: float
    c2_of_c: float


def mu_super_and_invert_c2(idx: QuotientIndices, A, env: SourceEnvelope, c: float, c2: float = 0.0) -> SuperInversion:
    """mu_bar(c2) and the c2 solving mu_bar(c2) = c (mu_bar is c2 plus a constant)."""
    f = SuperFamily(idx, A, env, c2)
    return SuperInversion(f.mu, c + 1.0 - f.deficit)


def invert_c2(idx, A, env, c: float) -> float:
    return mu_super_and_invert_c2(idx, A, env, c).c2_of_c


def family_from_record(rec: dict, env: SourceEnvelope | None = None):
    idx = QuotientIndices(rec["n"], rec["k"], rec["l"])
    env = env or SourceEnvelope(rec["C0"], rec["beta"], rec["s0"])
    if rec.get("kind", "sub") == "super":
        return SuperFamily(idx, rec["a"], env, rec["c2"])
    return SubFamily(idx, rec["a"], env, rec["c1"], rec["c2"])


# ---------------------------------------------------------------------------
# asymptotic certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticCertificate:
    exponent_fit: float | None
    predicted: float
    log_case: bool
    max_weighted_err: float
    weighted_growth: float
    exact_flag: bool

    def within(self, tol: float) -> bool:
        return self.exact_flag or abs(self.exponent_fit - self.predicted) <= tol


def decay_rate(H: float, beta: float) -> tuple[float, bool]:
    """min(beta/2, H) and whether the logarithmic case H = beta/2 applies."""
    return min(beta / 2, H), abs(H - beta / 2) <= BRANCH_EPS


def asymptotic_certificate(profile, beta: float | None = None, s_lo=1e2, s_hi=1e6, num=25) -> AsymptoticCertificate:
    """Fit the decay exponent of |w(s) - s - mu| on a geometric grid."""
    if s_hi / s_lo < 10:
        raise FitRangeError("need at least one decade for the fit")
    beta = profile.env.beta if beta is None else beta
    m, log_case = decay_rate(profile.H, beta)
    predicted = 1.0 - m
    s = np.geomspace(s_lo, s_hi, num)
    err = np.abs([profile.tail(v).value for v in s])
    weight = s ** (m - 1) / (np.log(s) if log_case else 1.0)
    weighted = err * weight
    last = s >= s_hi / 10
    growth = float(weighted[-1] / weighted[last][0]) if weighted[last][0] > 0 else 1.0
    if np.all(err < 1e-13):
        return AsymptoticCertificate(None, predicted, log_case, float(weighted.max()), growth, True)
    y = np.log(err / np.log(s)) if log_case else np.log(err)
    slope = float(np.polyfit(np.log(s), y, 1)[0])
    return AsymptoticCertificate(slope, predicted, log_case, float(weighted.max()), growth, False)


# ---------------------------------------------------------------------------
# reduction of a general SPD matrix to diagonal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalizedProblem:
    A: SpdDiagonal
    transform: np.ndarray  # orthogonal Q with Q^T A_full Q = diag(A)
    shift: dict

    def to_diagonal_coords(self, x):
        return np.asarray(x, dtype=float) @ self.transform

    def from_diagonal_coords(self, y):
        return np.asarray(y, dtype=float) @ self.transform.T

    def reconstruct(self) -> np.ndarray:
        Q = self.transform
        return Q @ np.diag(self.A.a) @ Q.T


def normalize_problem(A_full, b=None) -> NormalizedProblem:
    """Orthogonally diagonalize A_full (sorted ascending) and record the linear term b.

    With x = Q y, the quadratic (1/2) x^T A x + b.x becomes
    (1/2) y^T diag(a) y + (Q^T b).y; the linear part is subtracted from u.
    """
    A_full = np.asarray(A_full, dtype=float)
    if A_full.ndim != 2 or A_full.shape[0] != A_full.shape[1]:
        raise AdmissibilityError("A must be a square matrix")
    if not np.allclose(A_full, A_full.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A_full).max())):
        raise AdmissibilityError("A must be symmetric")
    vals, Q = np.linalg.eigh(A_full)
    if vals[0] <= 0:
        raise AdmissibilityError("A must be positive definite")
    b = np.zeros(A_full.shape[0]) if b is None else np.asarray(b, dtype=float)
    shift = {"b": b.tolist(), "b_diagonal": (Q.T @ b).tolist()}
    return NormalizedProblem(SpdDiagonal(vals), Q, shift)
