"""Grid-level sup/inf convolutions and comparison checks on 1-D profiles.

These routines inspect sampled profiles; they do not prove anything.  The
comparison check refuses to run unless the caller states that the sub- and
supersolution residual signs were certified elsewhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import gsym, symfun
from .errors import AdmissibilityError, CertificateMissingError, DegenerateDomainError
from .symfun import QuotientIndices


@dataclass(frozen=True)
class GridFunction1D:
    coords: np.ndarray
    vals: np.ndarray
    boundary_mask: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.coords, dtype=float).ravel()
        v = np.asarray(self.vals, dtype=float).ravel()
        if x.size != v.size or x.size < 3:
            raise ValueError("need at least three nodes with matching values")
        if not np.all(np.diff(x) > 0):
            raise ValueError("coords must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if self.boundary_mask is None:
            m = np.zeros(x.size, dtype=bool)
        else:
            m = np.asarray(self.boundary_mask, dtype=bool).copy()
        m[0] = m[-1] = True
        object.__setattr__(self, "coords", x)
        object.__setattr__(self, "vals", v)
        object.__setattr__(self, "boundary_mask", m)

    @property
    def osc(self) -> float:
        return float(self.vals.max() - self.vals.min())

    def __neg__(self):
        return GridFunction1D(self.coords, -self.vals, self.boundary_mask)

    @classmethod
    def sample(cls, f, coords) -> "GridFunction1D":
        x = np.asarray(coords, dtype=float)
        return cls(x, np.array([f(t) for t in x]))


def second_differences(u: GridFunction1D) -> np.ndarray:
    x, v = u.coords, u.vals
    hm, hp = np.diff(x)[:-1], np.diff(x)[1:]
    return 2 * (v[:-2] / (hm * (hm + hp)) - v[1:-1] / (hm * hp) + v[2:] / (hp * (hm + hp)))


def _piecewise_quadratic_sup(x, v, m):
    """max over y of Q(y) - m (x_i - y)^2, Q the union of node values and local quadratics."""
    d = x[:, None] - x[None, :]
    best = np.max(v[None, :] - m * d * d, axis=1)
    # quadratic through each consecutive triple, maximised on its own span
    yj, hm, hp = x[1:-1], x[1:-1] - x[:-2], x[2:] - x[1:-1]
    dm = (v[1:-1] - v[:-2]) / hm
    dp = (v[2:] - v[1:-1]) / hp
    c = (dp - dm) / (hm + hp)
    b = dm + c * hm  # slope at y_j
    xc = x[:, None] - yj[None, :]
    denom = 2 * (m - c)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (b[None, :] + 2 * m * xc) / denom[None, :]
    t = np.where(np.isfinite(t), t, 0.0)
    t = np.clip(t, -hm[None, :], hp[None, :])
    cand = v[1:-1][None, :] + b[None, :] * t + c[None, :] * t * t - m * (xc - t) ** 2
    cand = np.where((c < m)[None, :], cand, -np.inf)
    return np.maximum(best, cand.max(axis=1))


def _restrict(x, vals, eps):
    width = x[-1] - x[0]
    if eps <= 0:
        raise ValueError("eps must be positive")
    if 2 * eps >= width:
        raise DegenerateDomainError(f"eps={eps} leaves no interior in a domain of width {width}")
    keep = (x > x[0] + eps) & (x < x[-1] - eps)
    if keep.sum() < 3:
        raise DegenerateDomainError("fewer than three nodes remain after shrinking by eps")
    return GridFunction1D(x[keep], vals[keep])


def sup_convolution(u: GridFunction1D, eps: float, omega0: float | None = None, refine: bool = True) -> GridFunction1D:
    """u_eps^+(x) = sup_y u(y) - omega0 |x - y|^2 / eps^2, restricted to the eps-interior.

    With ``refine`` the sup also runs over the quadratic through each node
    triple, which is exact for quadratic data.  Quadratic interpolation has
    negative weights, so only ``refine=False`` (nodes only) is exactly monotone
    in the data.
    """
    omega0 = u.osc if omega0 is None else float(omega0)
    if omega0 < u.osc - 1e-15 * (1 + abs(u.osc)):
        raise ValueError("omega0 must be at least the oscillation of u")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if 2 * eps >= u.coords[-1] - u.coords[0]:
        raise DegenerateDomainError("eps larger than half the domain width")
    m = omega0 / eps**2
    if m == 0:
        vals = np.full(u.vals.size, u.vals.max())
    elif refine:
        vals = _piecewise_quadratic_sup(u.coords, u.vals, m)
    else:
        d = u.coords[:, None] - u.coords[None, :]
        vals = np.max(u.vals[None, :] - m * d * d, axis=1)
    return _restrict(u.coords, vals, eps)


def inf_convolution(v: GridFunction1D, eps: float, omega0: float | None = None, refine: bool = True) -> GridFunction1D:
    """v_eps^-(x) = inf_y v(y) + omega0 |x - y|^2 / eps^2 (the mirror of sup_convolution)."""
    return -sup_convolution(-v, eps, omega0, refine)


def semiconvexity_floor(eps: float, omega0: float) -> float:
    return -2 * omega0 / eps**2


# ---------------------------------------------------------------------------
# scaling trick
# ---------------------------------------------------------------------------


def _nodal_derivs(u: GridFunction1D):
    x, v = u.coords, u.vals
    hm, hp = np.diff(x)[:-1], np.diff(x)[1:]
    w1 = (-hp / (hm * (hm + hp))) * v[:-2] + ((hp - hm) / (hm * hp)) * v[1:-1] + (hm / (hp * (hm + hp))) * v[2:]
    return x[1:-1], w1, second_differences(u)


def scale_gain(u: GridFunction1D, t: float, idx: QuotientIndices, g_inf: float, a: float, g=None) -> np.ndarray:
    """Residual of u/t minus the guaranteed gain (1 - t) nu g_inf, at interior nodes.

    ``u`` samples a radial profile w(s) for A = a I; ``g`` is a function of s
    (defaults to the constant g_inf).
    """
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    s, w1, w2 = _nodal_derivs(u)
    w1t, w2t = w1 / t, w2 / t
    if not np.all(gsym.isotropic_admissible(idx, a, s, w1t, w2t)):
        raise AdmissibilityError("scaled profile leaves the admissible cone")
    S = gsym.isotropic_operator(idx, a, s, w1t, w2t)
    gv = np.full_like(s, g_inf) if g is None else np.asarray(g(s), dtype=float)
    # nu = sum lambda_i dS/dlambda_i / S, which homogeneity fixes at k - l
    lam0 = np.concatenate([np.full(idx.n - 1, a * w1[0]), [a * w1[0] + 2 * a * s[0] * w2[0]]])
    nu = symfun.euler_weighted_gradient(idx, lam0) / symfun.quotient_value(idx, lam0)
    return (S - gv) - (1 - t) * nu * g_inf


def scale_subsolution_check(u, t, idx, g_inf, a, g=None, tol: float = 1e-8) -> bool:
    """True iff u/t is a strict subsolution with margin (1 - t)(k - l) g_inf at every interior node."""
    return bool(np.all(scale_gain(u, t, idx, g_inf, a, g) >= -tol))


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonCertificate:
    verdict: str
    max_interior_excess: float
    boundary_excess: float
    tol: float
    mode: str
    grid_meta: dict

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_json(self) -> str:
        return json.dumps(
            {
                "verdict": self.verdict,
                "max_interior_excess": self.max_interior_excess,
                "boundary_excess": self.boundary_excess,
                "tol": self.tol,
                "mode": self.mode,
                "grid_meta": self.grid_meta,
            },
            sort_keys=True,
        )


def comparison_certificate(
    u: GridFunction1D,
    v: GridFunction1D,
    *,
    sub_certified: bool = False,
    super_certified: bool = False,
    unbounded: bool = False,
    tol: float | None = None,
) -> ComparisonCertificate:
    """Check sup over interior of (u - v) against its boundary sup.

    In unbounded mode the last node is the truncation of infinity: only the
    first node counts as boundary, (u - v)^+ must vanish and |u - v| must not
    grow across the last decade, and then u <= v + tol is required everywhere.
    """
    if not (sub_certified and super_certified):
        raise CertificateMissingError("residual certificates for both profiles are required")
    if u.coords.size != v.coords.size or not np.allclose(u.coords, v.coords, rtol=1e-14, atol=0):
        raise ValueError("u and v must share a grid")
    diff = u.vals - v.vals
    if tol is None:
        tol = 1e-7 * (1 + max(u.osc, v.osc))
    meta = {"n_nodes": int(u.coords.size), "x_min": float(u.coords[0]), "x_max": float(u.coords[-1])}
    if not unbounded:
        bmask = u.boundary_mask | v.boundary_mask
        b = float(diff[bmask].max())
        inner = float(diff[~bmask].max()) if np.any(~bmask) else -np.inf
        verdict = "PASS" if inner <= b + tol else "FAIL"
        return ComparisonCertificate(verdict, inner, b, tol, "bounded", meta)
    b = float(diff[0])
    tail = u.coords >= u.coords[-1] / 10
    gap = np.abs(diff[tail])
    decays = gap[-1] <= gap[0] + tol
    inner = float(diff[1:].max())
    meta["tail_gap_start"], meta["tail_gap_end"] = float(gap[0]), float(gap[-1])
    ok = b <= tol and decays and float(diff[tail].max()) <= tol and inner <= tol
    return ComparisonCertificate("PASS" if ok else "FAIL", inner, b, tol, "unbounded", meta)


def planted_bump(v: GridFunction1D, height: float, center: float | None = None, width: float | None = None) -> GridFunction1D:
    """v plus a smooth bump vanishing at both ends: a negative control for the comparison check."""
    x = v.coords
    center = 0.5 * (x[0] + x[-1]) if center is None else center
    width = 0.1 * (x[-1] - x[0]) if width is None else width
    z = (x - center) / width
    bump = np.where(np.abs(z) < 1, np.exp(1 - 1 / np.maximum(1 - z * z, 1e-300)), 0.0)
    return GridFunction1D(x, v.vals + height * bump, v.boundary_mask)
