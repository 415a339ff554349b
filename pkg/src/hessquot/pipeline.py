"""End-to-end run on an isotropic ball: barriers, c_*, splice, radial solve, sandwich."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import barrier, radial, symfun
from .construct import SourceEnvelope
from .radial import RadialProblem, RadialSolution, SandwichCertificate
from .symfun import QuotientIndices


@dataclass
class RadialPipeline:
    idx: QuotientIndices
    a: float
    env: SourceEnvelope
    s_in: float
    phi0: float
    core: barrier.Pipeline

    @property
    def c(self) -> float:
        return self.core.c

    def ray(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        X = np.zeros((s.size, self.idx.n))
        X[:, 0] = np.sqrt(2 * s / self.a)
        return X

    def g(self, s) -> np.ndarray:
        if self.env.g is None:
            return np.ones_like(np.asarray(s, dtype=float))
        return np.array([self.env.evaluate_g(x) for x in self.ray(s)]).reshape(np.shape(s))

    def lower(self, s) -> np.ndarray:
        return self.core.spliced(self.ray(s))

    def upper(self, s) -> np.ndarray:
        return np.asarray(self.core.sup.w(np.atleast_1d(np.asarray(s, dtype=float))))

    def problem(self, s_out: float, outer: str = "asymptote") -> RadialProblem:
        """Truncated problem; outer data from s + c or from the subsolution profile."""
        if outer == "asymptote":
            bc_out = s_out * symfun.c_star(self.idx) / self.a + self.c
        elif outer == "subsolution":
            bc_out = float(self.core.spliced.sub.w(s_out))
        else:
            raise ValueError(f"unknown outer condition {outer!r}")
        return RadialProblem(self.idx, self.a, self.s_in, s_out, self.g, self.phi0, bc_out)

    def initial(self, s) -> np.ndarray:
        # the spliced subsolution: admissible, below the solution, equal to phi0 at s_in
        return self.lower(s)

    def solve(self, s_out: float, N: int, grid: str = "geometric", outer: str = "asymptote") -> RadialSolution:
        return radial.solve_bvp(self.problem(s_out, outer), N, grid=grid, initial=self.initial)

    def sandwich(self, sol: RadialSolution, tol: float | None = None) -> SandwichCertificate:
        return radial.sandwich_certify(None, sol, self.lower, self.upper, tol)


def build_radial_pipeline(
    idx: QuotientIndices,
    env: SourceEnvelope,
    s_in: float = 1.0,
    phi0: float = 0.0,
    c_offset: float = 1.0,
    n_xi: int = 256,
    seed: int = 0,
) -> RadialPipeline:
    """A = c* I on the ball {s < s_in} with constant boundary value phi0."""
    prob = barrier.isotropic_ball_problem(idx, env, s_boundary=s_in, phi0=phi0, n_xi=n_xi, seed=seed)
    core = barrier.run_pipeline(prob, c_offset=c_offset)
    return RadialPipeline(idx, symfun.c_star(idx), env, s_in, phi0, core)


def far_field(rp: RadialPipeline, s_outs=(1e2, 1e3, 1e4), nodes_per_decade: int = 400) -> radial.FarFieldFit:
    pred, log_case = radial.predicted_exponent(rp.idx, rp.a, rp.env.beta)
    return radial.far_field_rate(
        rp.problem, rp.c, pred, log_case, s_outs, nodes_per_decade, initial=rp.initial, slope=symfun.c_star(rp.idx) / rp.a
    )


def ball_radius(idx: QuotientIndices, s_in: float) -> float:
    return math.sqrt(2 * s_in / symfun.c_star(idx))
