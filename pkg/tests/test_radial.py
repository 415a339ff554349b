import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessquot import construct as C
from hessquot import pipeline as P
from hessquot import radial as R
from hessquot import symfun
from hessquot.errors import AdmissibilityError, FitRangeError, InitializationError, NonconvergenceError
from hessquot.symfun import QuotientIndices

IDX = QuotientIndices(3, 3, 0)
SEVERAL = [QuotientIndices(3, 3, 0), QuotientIndices(5, 2, 1), QuotientIndices(6, 4, 1), QuotientIndices(5, 2, 0), QuotientIndices(4, 1, 0)]


def manufactured(idx, a):
    def w(s):
        return s + s**-2.0

    def g(s):
        s = np.asarray(s, dtype=float)
        return np.array([R.radial_operator(idx, a, v, 1 - 2 * v**-3.0, 6 * v**-4.0) for v in np.ravel(s)]).reshape(s.shape)

    return w, g


@pytest.mark.parametrize("idx", SEVERAL, ids=str)
def test_operator_at_c_star(idx):
    for a in (0.3, 1.0, 2.5):
        assert R.radial_operator(idx, a, 1.7, symfun.c_star(idx) / a, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_operator_l0_is_sigma_k():
    idx = QuotientIndices(4, 2, 0)
    a, s, w1, w2 = 0.7, 2.0, 1.3, -0.1
    x = np.zeros(4)
    x[0] = math.sqrt(2 * s / a)
    H = w1 * a * np.eye(4) + w2 * np.outer(a * x, a * x)
    assert R.radial_operator(idx, a, s, w1, w2) == pytest.approx(symfun.sigma(2, np.linalg.eigvalsh(H)), rel=1e-12)


@given(st.sampled_from(SEVERAL), st.floats(0.2, 3.0), st.floats(1.0, 50.0), st.floats(0.2, 3.0), st.floats(-0.3, 0.3))
def test_operator_matches_dense_oracle(idx, a, s, w1, w2):
    x = np.zeros(idx.n)
    x[0] = math.sqrt(2 * s / a)
    lam = np.linalg.eigvalsh(w1 * a * np.eye(idx.n) + w2 * np.outer(a * x, a * x))
    if not symfun.in_gamma_k(idx.k, lam):
        return
    ref = symfun.quotient_value(idx, lam)
    assert R.radial_operator(idx, a, s, w1, w2) == pytest.approx(ref, rel=1e-8)


def test_operator_rejects_nonpositive_slope():
    with pytest.raises(AdmissibilityError):
        R.radial_operator(IDX, 1.0, 2.0, 0.0, 0.1)


@pytest.mark.parametrize("idx", SEVERAL, ids=str)
@pytest.mark.parametrize("N", [20, 200])
def test_exact_linear_profile(idx, N):
    a = 0.8
    m = symfun.c_star(idx) / a
    prob = R.RadialProblem(idx, a, 1.0, 5.0, lambda s: np.ones_like(s), m * 1.0 + 0.3, m * 5.0 + 0.3)
    sol = R.solve_bvp(prob, N)
    assert np.max(np.abs(sol.w - (m * sol.s + 0.3))) <= 1e-10
    assert sol.residual_norm <= 1e-9 and sol.admissibility_flags.all()


@pytest.mark.parametrize("idx", [QuotientIndices(3, 3, 0), QuotientIndices(5, 2, 1)], ids=str)
def test_manufactured_second_order(idx):
    a = symfun.c_star(idx)
    w, g = manufactured(idx, a)
    prob = R.RadialProblem(idx, a, 2.0, 6.0, g, w(2.0), w(6.0))
    errs = []
    for N in (200, 400, 800):
        sol = R.solve_bvp(prob, N)
        errs.append(np.max(np.abs(sol.w - w(sol.s))))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 3.5 <= r1 <= 4.5 and 3.5 <= r2 <= 4.5, errs


def test_cauchy_refinement():
    idx = QuotientIndices(3, 3, 0)
    prob = R.RadialProblem(idx, 1.0, 1.0, 4.0, lambda s: 1 + s**-2.0, 0.0, 3.5)
    sols = [R.solve_bvp(prob, N) for N in (50, 100, 200)]
    d1 = np.max(np.abs(sols[1].w[::2] - sols[0].w))
    d2 = np.max(np.abs(sols[2].w[::2] - sols[1].w))
    assert 3.0 <= d1 / d2 <= 5.0


def test_discrete_comparison():
    g = lambda s: 1 + s**-2.0
    lo = R.solve_bvp(R.RadialProblem(IDX, 1.0, 1.0, 4.0, g, 0.0, 3.5), 200)
    hi = R.solve_bvp(R.RadialProblem(IDX, 1.0, 1.0, 4.0, g, 0.2, 3.6), 200)
    assert np.all(lo.w <= hi.w)


def test_newton_history_and_geometric_grid():
    prob = R.RadialProblem(IDX, 1.0, 1.0, 100.0, lambda s: 1 + s**-2.0, 0.0, 99.5)
    sol = R.solve_bvp(prob, 300, grid="geometric")
    hist = json.loads(R.history_json(sol))
    assert hist[0]["iter"] == 0 and hist[-1]["residual"] <= 1e-9
    assert all(0 < h["damping"] <= 1 for h in hist[1:])
    assert np.allclose(np.diff(np.log(sol.s)), math.log(100) / 300)


def test_solver_errors():
    prob = R.RadialProblem(IDX, 1.0, 1.0, 4.0, lambda s: np.ones_like(s), 2.0, 1.0)
    with pytest.raises(InitializationError):
        R.solve_bvp(prob, 50)
    prob = R.RadialProblem(IDX, 1.0, 1.0, 4.0, lambda s: 1 + s**-2.0, 0.0, 3.5)
    with pytest.raises(NonconvergenceError):
        R.solve_bvp(prob, 50, max_iter=1)
    with pytest.raises(ValueError):
        R.RadialProblem(IDX, 1.0, 0.5, 4.0, lambda s: s, 0.0, 1.0)


# ---------------------------------------------------------------------------
# sandwich and far field on the full pipeline
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def exact_pipeline():
    rp = P.build_radial_pipeline(IDX, C.SourceEnvelope(0.0, 3.0, 2.0), s_in=1.0)
    return rp, rp.solve(1e3, 1200)


def test_sandwich_g_one(exact_pipeline):
    rp, sol = exact_pipeline
    cert = rp.sandwich(sol)
    assert cert.passed
    assert np.all(cert.lower <= cert.upper + 1e-9)


def test_sandwich_controls(exact_pipeline):
    rp, sol = exact_pipeline
    shifted = R.RadialSolution(
        R.GridFunction1D(sol.s, sol.w - 1.0), sol.w1, sol.w2, sol.residual, sol.residual_norm, sol.admissibility_flags
    )
    assert not rp.sandwich(shifted).passed
    lower_itself = R.RadialSolution(
        R.GridFunction1D(sol.s, rp.lower(sol.s)), sol.w1, sol.w2, sol.residual, sol.residual_norm, sol.admissibility_flags
    )
    cert = rp.sandwich(lower_itself)
    assert cert.passed
    assert np.max(np.abs(cert.lower - lower_itself.w)) == 0.0


def test_sandwich_decaying_source():
    idx = QuotientIndices(5, 2, 1)
    a = symfun.c_star(idx)
    env = C.radial_source(1.0, 4.0, 2.0, np.full(5, a))
    rp = P.build_radial_pipeline(idx, env, s_in=1.5)
    sol = rp.solve(1e3, 1200)
    assert sol.admissibility_flags.all()
    assert rp.sandwich(sol).passed


def test_solution_csv(tmp_path, exact_pipeline):
    rp, sol = exact_pipeline
    cert = rp.sandwich(sol)
    prob = rp.problem(1e3)
    R.write_solution_csv(tmp_path / "a.csv", prob, sol, cert)
    R.write_solution_csv(tmp_path / "b.csv", prob, sol, cert)
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    assert a.splitlines()[0] == "s,w,w1,w2,residual,sub,super"
    assert len(a.splitlines()) == sol.s.size + 1


def test_far_field_exact_linear():
    def make(so):
        return R.RadialProblem(IDX, 1.0, 1.0, so, lambda s: np.ones_like(s), 1.5, so + 0.5)

    fit = R.far_field_rate(make, 0.5, -0.5, True, s_outs=(1e2, 1e3), nodes_per_decade=50)
    assert fit.exact_flag and fit.exponent is None and fit.within(0.0)


def test_predicted_exponents():
    assert R.predicted_exponent(QuotientIndices(5, 2, 1), 0.5, 4.0) == (pytest.approx(-0.25), False)
    assert R.predicted_exponent(QuotientIndices(3, 3, 0), 1.0, 3.0) == (pytest.approx(-0.5), True)


def test_far_field_log_case():
    env = C.radial_source(1.0, 3.0, 2.0, np.ones(3))
    rp = P.build_radial_pipeline(IDX, env, s_in=1.5)
    fit = P.far_field(rp)
    assert fit.log_case
    assert fit.within(0.15), fit.exponent


def test_far_field_needs_a_decade():
    with pytest.raises(FitRangeError):
        R.far_field_rate(lambda so: None, 0.0, -0.5, False, s_outs=(100.0, 500.0))


def test_fit_log_power_recovers_model():
    s = np.geomspace(10, 1e4, 6)
    D = s**-0.7 * (2.0 * np.log(s) + 0.5)
    assert R.fit_log_power(s, D) == pytest.approx(-0.7, abs=1e-6)
