"""Quadratic boundary barriers on ellipsoids and the spliced global subsolution.

Each barrier is

    w_xi(x) = phi(xi) + coef [ (x - xbar)^T A (x - xbar) - (xi - xbar)^T A (xi - xbar) ],

with coef = G^{1/p} / 2 so that D^2 w_xi = G^{1/p} A and S_{k,l}(D^2 w_xi) = G.
The apex is xbar = xi - A^{-1} (grad phi(xi) / (2 coef) + tau nu(xi)); on the
boundary w_xi - phi is decreasing in tau, so tau is found by a monotone
doubling search followed by bisection.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.special import gamma as gamma_fn
from scipy.stats import norm, qmc

from . import construct, symfun
from .construct import SourceEnvelope, SubFamily, SuperFamily
from .errors import BarrierConstructionError, ConfigurationError, RangeError
from .symfun import QuotientIndices, SpdDiagonal

BOUNDARY_TOL = 1e-10
C_STAR_PAD = 1e-6
JUMP_TOL = 1e-9


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------


def sphere_mesh(n: int, N: int, seed: int = 0) -> np.ndarray:
    """N unit vectors in R^n: Fibonacci lattice for n = 3, scrambled Sobol otherwise."""
    if n == 3:
        i = np.arange(N) + 0.5
        z = 1 - 2 * i / N
        r = np.sqrt(1 - z * z)
        theta = math.pi * (1 + math.sqrt(5)) * i
        return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])
    sob = qmc.Sobol(d=n, scramble=True, seed=seed)
    m = int(math.ceil(math.log2(max(N, 2))))
    u = sob.random_base2(m)[:N]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    x = norm.ppf(u)
    # pin the coordinate axes so the mesh is never blind along them
    x[: 2 * n] = np.vstack([np.eye(n), -np.eye(n)])[: min(N, 2 * n)]
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def level_points(A, s: float, dirs: np.ndarray) -> np.ndarray:
    """Points on {x^T A x / 2 = s} along each direction."""
    a = symfun._values(A)
    q = np.einsum("ij,j,ij->i", dirs, a, dirs)
    return dirs * np.sqrt(2 * s / q)[:, None]


# ---------------------------------------------------------------------------
# domain and boundary data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ellipsoid:
    """D = {x : sum (x_i / e_i)^2 < 1}, centred at the origin."""

    axes: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.axes, dtype=float).ravel()
        if not np.all(e > 0):
            raise ConfigurationError("ellipsoid semi-axes must be positive")
        object.__setattr__(self, "axes", e)

    @classmethod
    def ball(cls, n: int, radius: float) -> "Ellipsoid":
        return cls(np.full(n, float(radius)))

    @property
    def n(self):
        return self.axes.size

    def level(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.sum((x / self.axes) ** 2, axis=1)

    def on_boundary(self, x) -> bool:
        return bool(np.all(np.abs(self.level(x) - 1.0) <= BOUNDARY_TOL))

    def normal(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        v = x / self.axes**2
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def surface_points(self, N: int, seed: int = 0) -> np.ndarray:
        return sphere_mesh(self.n, N, seed) * self.axes

    def mesh_spacing(self, N: int) -> float:
        n = self.n
        area = 2 * math.pi ** (n / 2) / gamma_fn(n / 2)
        return float(self.axes.max() * (area / N) ** (1.0 / (n - 1)))

    def level_range(self, A) -> tuple[float, float]:
        """min and max of x^T A x / 2 over the boundary (exact for axis-aligned data)."""
        v = symfun._values(A) * self.axes**2 / 2
        return float(v.min()), float(v.max())


@dataclass(frozen=True)
class BoundaryData:
    """phi on the boundary, through a C^2 extension with its gradient."""

    phi: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    description: dict = field(default_factory=dict)

    @classmethod
    def constant(cls, value: float = 0.0) -> "BoundaryData":
        return cls(
            lambda x: np.full(np.atleast_2d(x).shape[0], float(value)),
            lambda x: np.zeros_like(np.atleast_2d(x), dtype=float),
            {"type": "constant", "value": float(value)},
        )

    @classmethod
    def linear(cls, coef, const: float = 0.0) -> "BoundaryData":
        v = np.asarray(coef, dtype=float)
        return cls(
            lambda x: np.atleast_2d(x) @ v + const,
            lambda x: np.broadcast_to(v, np.atleast_2d(x).shape).copy(),
            {"type": "linear", "coef": v.tolist(), "const": float(const)},
        )

    @classmethod
    def quadratic(cls, diag, coef=None, const: float = 0.0) -> "BoundaryData":
        """phi(x) = sum diag_i x_i^2 / 2 + coef . x + const."""
        d = np.asarray(diag, dtype=float)
        v = np.zeros_like(d) if coef is None else np.asarray(coef, dtype=float)
        return cls(
            lambda x: 0.5 * np.atleast_2d(x) ** 2 @ d + np.atleast_2d(x) @ v + const,
            lambda x: np.atleast_2d(x) * d + v,
            {"type": "quadratic", "diag": d.tolist(), "coef": v.tolist(), "const": float(const)},
        )


@dataclass
class ExteriorProblem:
    """Exterior Dirichlet data: (idx, A, D, phi, env) with D(1) in D in D(s0)."""

    idx: QuotientIndices
    A: SpdDiagonal
    D: Ellipsoid
    phi: BoundaryData
    env: SourceEnvelope
    n_xi: int = 512
    verify_factor: int = 4
    shell_layers: int = 8
    s_bar_max_factor: float = 1024.0
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.A, SpdDiagonal):
            self.A = SpdDiagonal(self.A)
        mem = symfun.membership(self.idx, self.A)
        if not mem.in_script_A:
            raise ConfigurationError("A must lie in the admissible set (S = 1 and H_k < (k-l)/2)")
        if self.D.n != self.idx.n:
            raise ConfigurationError("domain dimension does not match n")
        lo, hi = self.D.level_range(self.A)
        if lo < 1.0 - 1e-12:
            raise ConfigurationError(f"D(1) is not contained in D (min boundary level {lo} < 1)")
        if hi > self.env.s0 + 1e-12:
            raise ConfigurationError(f"D is not contained in D(s0) (max boundary level {hi} > s0={self.env.s0})")
        self.H = mem.H_k

    @property
    def s0(self):
        return self.env.s0

    @property
    def G_sup(self) -> float:
        return float(self.env.g_sup)

    @property
    def coef(self) -> float:
        return self.G_sup ** (1.0 / self.idx.p) / 2

    def s_of(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return 0.5 * np.einsum("ij,j,ij->i", X, self.A.a, X)


# ---------------------------------------------------------------------------
# barriers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BarrierRecord:
    xi: np.ndarray
    x_bar: np.ndarray
    coef: float
    tau: float
    phi_xi: float

    @property
    def apex_radius(self) -> float:
        return float(np.linalg.norm(self.x_bar))

    def __call__(self, X, A) -> np.ndarray:
        a = symfun._values(A)
        X = np.atleast_2d(X)
        d = X - self.x_bar
        d0 = self.xi - self.x_bar
        return self.phi_xi + self.coef * (np.einsum("ij,j,ij->i", d, a, d) - float(np.dot(d0 * a, d0)))

    def hessian(self, A) -> np.ndarray:
        return 2 * self.coef * np.diag(symfun._values(A))


def _verification_data(prob: ExteriorProblem):
    # the dense mesh plus every touching point, so the envelope interpolates phi on the xi-mesh
    Nv = prob.verify_factor * prob.n_xi
    Y = np.vstack([prob.D.surface_points(Nv, seed=prob.seed + 1), prob.D.surface_points(prob.n_xi, seed=prob.seed)])
    cap = 1e-9 * float(prob.D.axes.max())
    return Y, prob.phi.phi(Y), cap


def _barrier_excess(prob, xi, g, nu, phi_xi, tau, Y, phiY, keep, margin):
    # w_xi(y) - phi(y) + margin |y - xi|^2 written without forming xbar
    a = prob.A.a
    d = Y - xi
    quad = np.einsum("ij,j,ij->i", d, a, d)
    w_minus = prob.coef * quad + d @ g + 2 * prob.coef * tau * (d @ nu)
    ex = phi_xi + w_minus - phiY + margin * np.sum(d * d, axis=1)
    return np.where(keep, ex, -np.inf)


def _continuous_tau(prob, xi, g, nu, phi_xi, Y, keep, margin, h, starts: int = 4) -> float:
    """Smallest tau keeping the barrier below phi between mesh points.

    The boundary excess is base(y) + tau slope(y) with slope < 0 off xi, so the
    binding tau is max base / (-slope); it is climbed from the worst mesh points.
    """
    a, e, coef = prob.A.a, prob.D.axes, prob.coef
    rho = max(h, 0.1 * prob.D.mesh_spacing(prob.verify_factor * prob.n_xi))

    def ratio(Yp):
        d = Yp - xi
        base = phi_xi + coef * np.einsum("ij,j,ij->i", d, a, d) + d @ g - prob.phi.phi(Yp) + margin * np.sum(d * d, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return base / (-2 * coef * (d @ nu))

    r = np.where(keep & (np.linalg.norm(Y - xi, axis=1) >= rho), ratio(Y), -np.inf)

    def neg_ratio(v):
        nv = np.linalg.norm(v)
        y = e * v / nv
        d = y - xi
        if np.linalg.norm(d) < rho:
            return 0.0, np.zeros_like(v)
        den = -2 * coef * float(d @ nu)
        num = phi_xi + coef * float(d @ (a * d)) + float(d @ g) - float(prob.phi.phi(y[None, :])[0]) + margin * float(d @ d)
        gnum = 2 * coef * a * d + g - prob.phi.grad(y[None, :])[0] + 2 * margin * d
        gy = (gnum * den + num * 2 * coef * nu) / den**2
        vh = v / nv
        gv = (e * gy - vh * float(vh @ (e * gy))) / nv
        return -num / den, -gv

    best = float(r.max())
    for k in np.argsort(r)[-starts:]:
        if not np.isfinite(r[k]):
            continue
        res = optimize.minimize(neg_ratio, Y[k] / e, jac=True, method="BFGS", options={"gtol": 1e-10, "maxiter": 100})
        best = max(best, -float(res.fun))
    return best


def build_barrier(prob: ExteriorProblem, xi, *, _cache=None, tau_max: float = 1e12) -> BarrierRecord:
    """Barrier touching phi from below at the boundary point xi."""
    xi = np.asarray(xi, dtype=float)
    if not prob.D.on_boundary(xi):
        raise BarrierConstructionError(f"point {xi} is not on the boundary", xi)
    Y, phiY, h = _cache if _cache is not None else _verification_data(prob)
    keep = np.linalg.norm(Y - xi, axis=1) >= h
    nu = prob.D.normal(xi)[0]
    g = prob.phi.grad(xi[None, :])[0]
    phi_xi = float(prob.phi.phi(xi[None, :])[0])
    margin = 1e-6 * prob.coef * float(prob.A.a.min())

    def ok(t):
        return np.max(_barrier_excess(prob, xi, g, nu, phi_xi, t, Y, phiY, keep, margin)) <= 0

    tau = 1e-6 * (1 + prob.coef * float(prob.A.a.max() * prob.D.axes.max()))
    while not ok(tau):
        tau *= 2
        if tau > tau_max:
            ex = _barrier_excess(prob, xi, g, nu, phi_xi, tau, Y, phiY, keep, margin)
            bad = Y[int(np.argmax(ex))]
            raise BarrierConstructionError(f"no barrier at xi={xi} up to tau={tau_max}; violation at {bad}", bad)
    lo, hi = tau / 2, tau
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    # the mesh only samples the boundary: raise tau to cover the excess between mesh points
    tau = max(hi, _continuous_tau(prob, xi, g, nu, phi_xi, Y, keep, margin, h) * (1 + 1e-9))
    x_bar = xi - (g / (2 * prob.coef) + tau * nu) / prob.A.a
    return BarrierRecord(xi, x_bar, prob.coef, tau, phi_xi)


@dataclass
class BarrierSet:
    """A family of barriers evaluated together; their max is the discrete envelope."""

    A: SpdDiagonal
    records: list
    xi: np.ndarray = field(init=False)
    x_bar: np.ndarray = field(init=False)
    const: np.ndarray = field(init=False)
    coef: float = field(init=False)

    def __post_init__(self):
        a = self.A.a
        self.xi = np.array([r.xi for r in self.records])
        self.x_bar = np.array([r.x_bar for r in self.records])
        self.coef = self.records[0].coef
        d0 = self.xi - self.x_bar
        xbar_q = np.einsum("ij,j,ij->i", self.x_bar, a, self.x_bar)
        self.const = np.array([r.phi_xi for r in self.records]) + self.coef * (
            xbar_q - np.einsum("ij,j,ij->i", d0, a, d0)
        )
        self._lin = self.x_bar * a  # A xbar

    def values(self, X) -> np.ndarray:
        """Matrix of w_xi(x), shape (len(X), len(records))."""
        X = np.atleast_2d(X)
        xq = np.einsum("ij,j,ij->i", X, self.A.a, X)
        return self.const[None, :] + self.coef * (xq[:, None] - 2 * X @ self._lin.T)

    def envelope(self, X, chunk: int = 4096) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.empty(X.shape[0])
        for i in range(0, X.shape[0], chunk):
            out[i : i + chunk] = self.values(X[i : i + chunk]).max(axis=1)
        return out

    def extremes(self, X, chunk: int = 4096) -> tuple[float, float]:
        lo, hi = np.inf, -np.inf
        X = np.atleast_2d(X)
        for i in range(0, X.shape[0], chunk):
            V = self.values(X[i : i + chunk])
            lo, hi = min(lo, float(V.min())), max(hi, float(V.max()))
        return lo, hi

    @property
    def apex_bound(self) -> float:
        return float(np.linalg.norm(self.x_bar, axis=1).max())


def build_barriers(prob: ExteriorProblem) -> BarrierSet:
    cache = _verification_data(prob)
    xis = prob.D.surface_points(prob.n_xi, seed=prob.seed)
    return BarrierSet(prob.A, [build_barrier(prob, xi, _cache=cache) for xi in xis])


def shell_points(prob: ExteriorProblem, dirs: np.ndarray, layers: int) -> np.ndarray:
    """Points of the closed shell D(s0) minus D along rays, boundaries included."""
    e, a = prob.D.axes, prob.A.a
    r_in = 1.0 / np.sqrt(np.sum((dirs / e) ** 2, axis=1))
    r_out = np.sqrt(2 * prob.s0 / np.einsum("ij,j,ij->i", dirs, a, dirs))
    t = np.linspace(0.0, 1.0, layers + 1)
    r = r_in[:, None] + (r_out - r_in)[:, None] * t[None, :]
    return (dirs[:, None, :] * r[:, :, None]).reshape(-1, prob.idx.n)


@dataclass(frozen=True)
class EnvelopeSummary:
    m_s0: float
    M_s0: float
    apex_bound: float
    n_barriers: int


def _polish_extreme(barriers: BarrierSet, surface, X, sign: float, starts: int = 4) -> float:
    """Refine sign * max over the surface of the barrier family, seeded at the best mesh pairs."""
    V = sign * barriers.values(X)
    best = float(V.max())
    flat = np.argsort(V, axis=None)[-starts:]
    for i, j in zip(*np.unravel_index(flat, V.shape)):
        rec = barriers.records[j]

        def f(v, rec=rec):
            return -sign * float(rec(surface(v), barriers.A)[0])

        res = optimize.minimize(f, X[i], method="BFGS", options={"gtol": 1e-10, "maxiter": 200})
        best = max(best, -float(res.fun))
    return sign * best


def barrier_envelope(prob: ExteriorProblem, barriers: BarrierSet | None = None):
    """The discrete envelope w_under = max_xi w_xi together with m_s0 and M_s0."""
    barriers = build_barriers(prob) if barriers is None else barriers
    dirs = sphere_mesh(prob.idx.n, prob.verify_factor * prob.n_xi, seed=prob.seed + 2)
    P = shell_points(prob, dirs, prob.shell_layers)
    m, _ = barriers.extremes(P)
    # the unconstrained minimiser of w_xi is its apex; include apexes lying in the shell
    s_apex = prob.s_of(barriers.x_bar)
    inside = (prob.D.level(barriers.x_bar) >= 1.0) & (s_apex <= prob.s0)
    if np.any(inside):
        V = barriers.values(barriers.x_bar[inside])
        m = min(m, float(V.min()))

    # otherwise a convex quadratic attains its extremes over the shell on its two boundaries
    def on_D(v):
        return prob.D.axes * v / np.linalg.norm(v)

    def on_level(v):
        return level_points(prob.A, prob.s0, np.atleast_2d(v))[0]

    inner = prob.D.surface_points(prob.verify_factor * prob.n_xi, seed=prob.seed + 2)
    outer = level_points(prob.A, prob.s0, dirs)
    m = min(m, _polish_extreme(barriers, on_D, inner, -1.0), _polish_extreme(barriers, on_level, outer, -1.0))
    M = _polish_extreme(barriers, on_level, outer, 1.0)
    return barriers, EnvelopeSummary(m, M, barriers.apex_bound, len(barriers.records))


@dataclass(frozen=True)
class RefinementCheck:
    n_xi: int
    delta_m: float
    delta_M: float
    tol: float

    @property
    def converged(self) -> bool:
        return max(abs(self.delta_m), abs(self.delta_M)) < self.tol


def refinement_check(prob: ExteriorProblem, tol: float = 1e-4) -> RefinementCheck:
    """Change in (m_s0, M_s0) when the xi-mesh is doubled."""
    coarse = barrier_envelope(prob)[1]
    fine_prob = ExteriorProblem(
        prob.idx, prob.A, prob.D, prob.phi, prob.env, 2 * prob.n_xi,
        prob.verify_factor, prob.shell_layers, prob.s_bar_max_factor, prob.seed,
    )
    fine = barrier_envelope(fine_prob)[1]
    return RefinementCheck(prob.n_xi, fine.m_s0 - coarse.m_s0, fine.M_s0 - coarse.M_s0, tol)


# ---------------------------------------------------------------------------
# c_* and the splice
# ---------------------------------------------------------------------------


def _s_bar_ladder(prob: ExteriorProblem):
    j = 1
    while True:
        s = prob.s0 * 2.0 ** (j / 4)
        if s > prob.s0 * prob.s_bar_max_factor:
            return
        yield s
        j += 1


def _outer_splice_level(prob, barriers, sub: SubFamily, dirs) -> float | None:
    for s_bar in _s_bar_ladder(prob):
        wmax = float(barriers.envelope(level_points(prob.A, s_bar, dirs)).max())
        if sub.w(s_bar) >= wmax + JUMP_TOL:
            return s_bar
    return None


@dataclass(frozen=True)
class CStarResult:
    c_star: float
    alpha: float
    mu_alpha: float
    m_s0: float
    M_s0: float
    s_bar: float


def compute_c_star(prob: ExteriorProblem, barriers: BarrierSet | None = None, summary: EnvelopeSummary | None = None):
    """c_* = max(mu(alpha, m_s0), M_s0) + pad, alpha chosen so the outer splice exists."""
    if summary is None:
        barriers, summary = barrier_envelope(prob, barriers)
    dirs = sphere_mesh(prob.idx.n, prob.verify_factor * prob.n_xi, seed=prob.seed + 3)
    alpha = construct.default_alpha(prob.idx, prob.A, prob.env)
    for _ in range(80):
        sub = SubFamily(prob.idx, prob.A, prob.env, alpha, summary.m_s0)
        s_bar = _outer_splice_level(prob, barriers, sub, dirs)
        if s_bar is not None:
            c_star = max(sub.mu, summary.M_s0) + C_STAR_PAD
            return barriers, summary, CStarResult(c_star, alpha, sub.mu, summary.m_s0, summary.M_s0, s_bar)
        alpha *= 2
    raise ConfigurationError("outer splice inequality could not be met for any alpha")


@dataclass
class SplicedSubsolution:
    """u_under = w_under near D, max(w_sub, w_under) in the middle shell, w_sub far out."""

    prob: ExteriorProblem
    barriers: BarrierSet
    sub: SubFamily
    c: float
    s_bar: float

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        s = self.prob.s_of(X)
        out = np.empty(X.shape[0])
        near = s <= self.prob.s0
        far = s >= self.s_bar
        mid = ~near & ~far
        if np.any(near):
            out[near] = self.barriers.envelope(X[near])
        if np.any(mid):
            ws = np.array([self.sub.w(v) for v in s[mid]])
            out[mid] = np.maximum(ws, self.barriers.envelope(X[mid]))
        if np.any(far):
            out[far] = np.array([self.sub.w(v) for v in s[far]])
        return out

    def interface_jumps(self, dirs) -> dict:
        """Largest jump across the two interfaces (both sides evaluated at the same points)."""
        P0 = level_points(self.prob.A, self.prob.s0, dirs)
        env0 = self.barriers.envelope(P0)
        j0 = float(np.max(np.maximum(self.sub.w(self.prob.s0), env0) - env0))
        P1 = level_points(self.prob.A, self.s_bar, dirs)
        w1 = self.sub.w(self.s_bar)
        j1 = float(np.max(np.maximum(w1, self.barriers.envelope(P1)) - w1))
        return {"inner": j0, "outer": j1}

    def boundary_error(self) -> float:
        """max |u_under - phi| over the barrier touching points."""
        xi = self.barriers.xi
        return float(np.max(np.abs(self.barriers.envelope(xi) - self.prob.phi.phi(xi))))


def splice_subsolution(prob: ExteriorProblem, c: float, cs: CStarResult, barriers: BarrierSet) -> SplicedSubsolution:
    if c <= cs.c_star:
        raise RangeError(f"c={c} must exceed c_*={cs.c_star}")
    c1 = construct.invert_c1(prob.idx, prob.A, prob.env, cs.m_s0, c, alpha=cs.alpha)
    sub = SubFamily(prob.idx, prob.A, prob.env, c1, cs.m_s0)
    dirs = sphere_mesh(prob.idx.n, prob.verify_factor * prob.n_xi, seed=prob.seed + 3)
    s_bar = _outer_splice_level(prob, barriers, sub, dirs)
    if s_bar is None:
        raise ConfigurationError("outer splice inequality unsatisfiable below s_bar_max")
    inner_env = barriers.envelope(level_points(prob.A, prob.s0, dirs))
    if sub.w(prob.s0) > inner_env.min() + JUMP_TOL:
        raise ConfigurationError("inner splice inequality fails on the s0 level set")
    return SplicedSubsolution(prob, barriers, sub, c, s_bar)


def ordering_chain(spliced: SplicedSubsolution, sup: SuperFamily, cs: CStarResult) -> dict:
    """The chain wbar >= c2(c) >= c > c_* > M_s0 >= m_s0 >= w_sub on the s0 level set."""
    s0 = spliced.prob.s0
    vals = {
        "wbar_s0": sup.w(s0),
        "c2": sup.c2,
        "c": spliced.c,
        "c_star": cs.c_star,
        "M_s0": cs.M_s0,
        "m_s0": cs.m_s0,
        "w_sub_s0": spliced.sub.w(s0),
    }
    seq = list(vals.values())
    tol = 1e-9 * (1 + max(abs(v) for v in seq))
    ok = all(seq[i] >= seq[i + 1] - tol for i in range(len(seq) - 1)) and vals["c"] > vals["c_star"]
    ok = ok and vals["c_star"] > vals["M_s0"]
    return {"values": vals, "holds": bool(ok)}


@dataclass
class Pipeline:
    prob: ExteriorProblem
    barriers: BarrierSet
    summary: EnvelopeSummary
    cstar: CStarResult
    c: float
    spliced: SplicedSubsolution
    sup: SuperFamily

    def below_super(self, X) -> float:
        """max(u_under - wbar) over the given points (should be <= 0)."""
        X = np.atleast_2d(X)
        s = self.prob.s_of(X)
        wb = np.array([self.sup.w(v) for v in s])
        return float(np.max(self.spliced(X) - wb))


def run_pipeline(prob: ExteriorProblem, c_offset: float = 1.0, c: float | None = None) -> Pipeline:
    """Barriers, envelope, c_*, splice at c = c_* + c_offset, and the matching supersolution."""
    barriers, summary = barrier_envelope(prob)
    barriers, summary, cs = compute_c_star(prob, barriers, summary)
    c = cs.c_star + c_offset if c is None else c
    spliced = splice_subsolution(prob, c, cs, barriers)
    c2 = construct.invert_c2(prob.idx, prob.A, prob.env, c)
    sup = SuperFamily(prob.idx, prob.A, prob.env, c2)
    return Pipeline(prob, barriers, summary, cs, c, spliced, sup)


def isotropic_ball_problem(idx: QuotientIndices, env: SourceEnvelope, s_boundary: float = 1.0, phi0: float = 0.0, **kw):
    """A = c* I, D the ball on which x^T A x / 2 = s_boundary, constant boundary data."""
    a = symfun.c_star(idx)
    R = math.sqrt(2 * s_boundary / a)
    return ExteriorProblem(idx, SpdDiagonal.isotropic(idx.n, a), Ellipsoid.ball(idx.n, R), BoundaryData.constant(phi0), env, **kw)


def write_envelope_csv(path, X, values) -> None:
    X = np.atleast_2d(X)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow([f"x{i}" for i in range(X.shape[1])] + ["w_under"])
        for row, v in zip(X, values):
            wr.writerow(["%.17g" % t for t in row] + ["%.17g" % v])
