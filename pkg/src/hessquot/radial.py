"""Two-point boundary value solver for the isotropic G-Sym reduction.

For A = a I the unknown is the profile w(s), s = a |x|^2 / 2, and the equation
is N(s, w', w'') = g(s) with N from ``gsym.isotropic_operator``.  Central finite
differences give a tridiagonal Jacobian; Newton steps are damped by
backtracking until every node stays admissible and the residual decreases.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.linalg import solve_banded

from . import gsym, symfun
from .errors import AdmissibilityError, FitRangeError, InitializationError, NonconvergenceError
from .symfun import QuotientIndices
from .viscosity import GridFunction1D

NEWTON_TOL = 1e-9
ARMIJO = 1e-4
MAX_HALVINGS = 20
STAGNATION_WINDOW = 30


def radial_operator(idx: QuotientIndices, a: float, s: float, w1: float, w2: float) -> float:
    """S_{k,l}(D^2 u) for u = w(a |x|^2 / 2), as a function of (s, w', w'')."""
    if w1 <= 0:
        raise AdmissibilityError("radial operator needs w' > 0")
    Pl = gsym._iso_sigma(idx.n, idx.l, a, np.float64(s), np.float64(w1), np.float64(w2))[0]
    if Pl <= 0:
        raise AdmissibilityError("sigma_l of the radial spectrum is not positive")
    return float(gsym.isotropic_operator(idx, a, s, w1, w2))


@dataclass
class RadialProblem:
    idx: QuotientIndices
    a: float
    s_in: float
    s_out: float
    g: Callable[[np.ndarray], np.ndarray]
    bc_in: float
    bc_out: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")
        if not 1.0 <= self.s_in < self.s_out:
            raise ValueError("need 1 <= s_in < s_out")

    def g_values(self, s) -> np.ndarray:
        gv = np.broadcast_to(np.asarray(self.g(np.asarray(s, dtype=float)), dtype=float), np.shape(s)).copy()
        if not np.all(gv > 0):
            raise ValueError("g must be positive on the interval")
        return gv


@dataclass
class RadialSolution:
    grid: GridFunction1D
    w1: np.ndarray
    w2: np.ndarray
    residual: np.ndarray
    residual_norm: float
    admissibility_flags: np.ndarray
    history: list = field(default_factory=list)

    @property
    def s(self):
        return self.grid.coords

    @property
    def w(self):
        return self.grid.vals


def make_grid(s_in: float, s_out: float, N: int, kind: str = "uniform") -> np.ndarray:
    """N + 1 nodes; ``kind='geometric'`` spaces them evenly in ln s."""
    if kind == "uniform":
        return np.linspace(s_in, s_out, N + 1)
    if kind == "geometric":
        return np.geomspace(s_in, s_out, N + 1)
    raise ValueError(f"unknown grid kind {kind!r}")


def _stencils(s):
    hm, hp = s[1:-1] - s[:-2], s[2:] - s[1:-1]
    d1 = np.stack([-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))])
    d2 = np.stack([2 / (hm * (hm + hp)), -2 / (hm * hp), 2 / (hp * (hm + hp))])
    return d1, d2


def _derivs(w, d1, d2):
    w1 = d1[0] * w[:-2] + d1[1] * w[1:-1] + d1[2] * w[2:]
    w2 = d2[0] * w[:-2] + d2[1] * w[1:-1] + d2[2] * w[2:]
    return w1, w2


def _residual(prob, s, w, d1, d2, gv):
    w1, w2 = _derivs(w, d1, d2)
    si = s[1:-1]
    ok = gsym.isotropic_admissible(prob.idx, prob.a, si, w1, w2)
    with np.errstate(all="ignore"):
        F = gsym.isotropic_operator(prob.idx, prob.a, si, w1, w2) - gv
    return F, ok, w1, w2


def _jacobian_banded(prob, s, w, d1, d2):
    w1, w2 = _derivs(w, d1, d2)
    _, N1, N2 = gsym.isotropic_operator(prob.idx, prob.a, s[1:-1], w1, w2, derivatives=True)
    lower = N1 * d1[0] + N2 * d2[0]
    diag = N1 * d1[1] + N2 * d2[1]
    upper = N1 * d1[2] + N2 * d2[2]
    m = diag.size
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return ab


def solve_bvp(
    prob: RadialProblem,
    N: int = 400,
    *,
    grid: str | np.ndarray = "uniform",
    initial=None,
    tol: float = NEWTON_TOL,
    max_iter: int = 200,
) -> RadialSolution:
    """Damped Newton on the central-difference discretization.

    ``initial`` is a callable of s or an array on the grid; the default is the
    linear interpolant of the boundary data.
    """
    s = np.asarray(grid, dtype=float) if not isinstance(grid, str) else make_grid(prob.s_in, prob.s_out, N, grid)
    if s[0] != prob.s_in or s[-1] != prob.s_out:
        raise ValueError("grid must start at s_in and end at s_out")
    if initial is None:
        if prob.bc_out <= prob.bc_in:
            raise InitializationError("linear initial guess has non-positive slope")
        w = prob.bc_in + (prob.bc_out - prob.bc_in) * (s - s[0]) / (s[-1] - s[0])
    else:
        w = np.array(initial(s) if callable(initial) else initial, dtype=float)
    w[0], w[-1] = prob.bc_in, prob.bc_out
    d1, d2 = _stencils(s)
    gv = prob.g_values(s[1:-1])
    F, ok, _, _ = _residual(prob, s, w, d1, d2, gv)
    if not np.all(ok):
        bad = int(np.argmin(ok)) + 1
        raise InitializationError(f"initial guess is not admissible at s={s[bad]}")
    norm = float(np.max(np.abs(F)))
    history = [{"iter": 0, "residual": norm, "damping": 0.0}]
    best_window = [norm]
    for it in range(1, max_iter + 1):
        if norm <= tol:
            break
        ab = _jacobian_banded(prob, s, w, d1, d2)
        try:
            delta = solve_banded((1, 1), ab, -F)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NonconvergenceError(f"singular Jacobian at iteration {it}: {exc}", history) from exc
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = w.copy()
            trial[1:-1] += lam * delta
            Ft, okt, _, _ = _residual(prob, s, trial, d1, d2, gv)
            if np.all(okt) and np.all(np.isfinite(Ft)):
                nt = float(np.max(np.abs(Ft)))
                if nt <= (1 - ARMIJO * lam) * norm:
                    break
            lam *= 0.5
        else:
            raise NonconvergenceError(f"line search failed at iteration {it} (residual {norm:.3e})", history)
        w, F, norm = trial, Ft, nt
        history.append({"iter": it, "residual": norm, "damping": lam})
        best_window.append(norm)
        if len(best_window) > STAGNATION_WINDOW and norm > 1e-2 * best_window[-STAGNATION_WINDOW - 1]:
            raise NonconvergenceError(f"stagnated at residual {norm:.3e} after {it} iterations", history)
    if norm > tol:
        raise NonconvergenceError(f"no convergence in {max_iter} iterations (residual {norm:.3e})", history)
    F, ok, w1, w2 = _residual(prob, s, w, d1, d2, gv)
    flags = np.ones(s.size, dtype=bool)
    flags[1:-1] = ok
    res = np.zeros(s.size)
    res[1:-1] = F
    W1, W2 = np.full(s.size, np.nan), np.full(s.size, np.nan)
    W1[1:-1], W2[1:-1] = w1, w2
    return RadialSolution(GridFunction1D(s, w), W1, W2, res, float(np.max(np.abs(F))), flags, history)


def history_json(sol: RadialSolution) -> str:
    return json.dumps(sol.history)


# ---------------------------------------------------------------------------
# sandwich certificate
# ---------------------------------------------------------------------------


def _profile_values(f, s) -> np.ndarray:
    if hasattr(f, "w"):
        return np.asarray(f.w(np.asarray(s, dtype=float)), dtype=float)
    return np.asarray(f(np.asarray(s, dtype=float)), dtype=float)


@dataclass(frozen=True)
class SandwichCertificate:
    passed: bool
    worst_node: int
    worst_s: float
    worst_violation: float
    tol: float
    lower: np.ndarray
    upper: np.ndarray

    @property
    def verdict(self):
        return "PASS" if self.passed else "FAIL"


def sandwich_certify(prob: RadialProblem, sol: RadialSolution, sub, sup, tol: float | None = None) -> SandwichCertificate:
    """Check lower(s) - tol <= w_h(s) <= upper(s) + tol at every node.

    ``sub`` and ``sup`` are profile families (anything with ``.w``) or plain
    callables of s.
    """
    s, w = sol.s, sol.w
    lo, hi = _profile_values(sub, s), _profile_values(sup, s)
    tol = 1e-8 * (1 + float(np.max(np.abs(w)))) if tol is None else tol
    viol = np.maximum(lo - w, w - hi)
    j = int(np.argmax(viol))
    return SandwichCertificate(bool(viol[j] <= tol), j, float(s[j]), float(viol[j]), tol, lo, hi)


def write_solution_csv(path, prob: RadialProblem, sol: RadialSolution, cert: SandwichCertificate | None = None):
    lo = cert.lower if cert is not None else np.full(sol.s.size, np.nan)
    hi = cert.upper if cert is not None else np.full(sol.s.size, np.nan)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["s", "w", "w1", "w2", "residual", "sub", "super"])
        for row in zip(sol.s, sol.w, sol.w1, sol.w2, sol.residual, lo, hi):
            wr.writerow(["%.17g" % v for v in row])


# ---------------------------------------------------------------------------
# far field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FarFieldFit:
    exponent: float | None
    predicted: float
    log_case: bool
    s_eval: np.ndarray
    deviation: np.ndarray
    exact_flag: bool

    def within(self, tol: float) -> bool:
        return self.exact_flag or abs(self.exponent - self.predicted) <= tol


def predicted_exponent(idx: QuotientIndices, a: float, beta: float) -> tuple[float, bool]:
    """1 - min(beta/2, H) with H = (k - l) / (2 H_k(a I)), and whether the log case applies."""
    H = symfun.script_H(idx, np.full(idx.n, a))
    return 1.0 - min(beta / 2, H), abs(H - beta / 2) <= 1e-9


def far_field_rate(
    make_problem: Callable[[float], RadialProblem],
    c: float,
    predicted: float,
    log_case: bool,
    s_outs=(1e2, 1e3, 1e4),
    nodes_per_decade: int = 400,
    initial=None,
    slope: float = 1.0,
) -> FarFieldFit:
    """Fit the decay of |w_h(s) - slope s - c| at s = s_out / 10 over expanding domains.

    ``make_problem(s_out)`` builds the truncated problem (outer data from the
    asymptote); the fit uses ln(D / ln s) against ln s in the log case.
    """
    s_outs = np.asarray(s_outs, dtype=float)
    if s_outs.size < 2 or s_outs.max() / s_outs.min() < 10:
        raise FitRangeError("need at least two domains spanning a decade")
    s_eval, dev = [], []
    for so in s_outs:
        prob = make_problem(float(so))
        N = int(round(nodes_per_decade * math.log10(so / prob.s_in)))
        sol = solve_bvp(prob, N, grid="geometric", initial=initial)
        se = so / 10
        wv = float(np.interp(se, sol.s, sol.w))
        s_eval.append(se)
        dev.append(abs(wv - slope * se - c))
    s_eval, dev = np.array(s_eval), np.array(dev)
    if np.all(dev < 1e-11 * (1 + s_eval)):
        return FarFieldFit(None, predicted, log_case, s_eval, dev, True)
    k = fit_log_power(s_eval, dev) if log_case else float(np.polyfit(np.log(s_eval), np.log(dev), 1)[0])
    return FarFieldFit(k, predicted, log_case, s_eval, dev, False)


def fit_log_power(s, D, bounds=(-5.0, 1.0)) -> float:
    """Exponent kappa of the model D ~ s^kappa (A ln s + B), by relative least squares.

    A and B enter linearly, so they are eliminated for each kappa and the
    remaining one-dimensional residual is minimized.
    """
    s, D = np.asarray(s, dtype=float), np.asarray(D, dtype=float)

    def resid(k):
        M = np.column_stack([s**k * np.log(s), s**k]) / D[:, None]
        coef = np.linalg.lstsq(M, np.ones(s.size), rcond=None)[0]
        return float(np.sum((M @ coef - 1) ** 2))

    grid = np.linspace(bounds[0], bounds[1], 121)
    k0 = grid[int(np.argmin([resid(k) for k in grid]))]
    step = grid[1] - grid[0]
    r = optimize.minimize_scalar(resid, bounds=(k0 - step, k0 + step), method="bounded", options={"xatol": 1e-10})
    return float(r.x)
