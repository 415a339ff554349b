import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessquot import symfun
from hessquot.errors import AdmissibilityError, DivisionDomainError, IndexRangeError
from hessquot.symfun import QuotientIndices, SpdDiagonal, Spectrum
from oracles import central_diff, quotient_enum, sigma_enum, sigma_reduced_enum

spectra = st.integers(3, 8).flatmap(
    lambda n: st.lists(st.floats(-3, 3, allow_nan=False).filter(lambda v: abs(v) > 1e-3), min_size=n, max_size=n)
)
positive = st.integers(3, 8).flatmap(lambda n: st.lists(st.floats(0.05, 5), min_size=n, max_size=n))


def test_sigma_examples():
    assert symfun.sigma(0, [5, -2, 7]) == 1.0
    assert symfun.sigma(3, [1, 1, 1]) == 1.0
    assert symfun.sigma(2, [1, 2, 3]) == 11.0
    assert symfun.sigma(-1, [1, 2, 3]) == 0.0


def test_sigma_reduced_examples():
    # entries are 0-based: i = 2 drops the value 3
    assert symfun.sigma_reduced(1, 2, [1, 2, 3]) == 3.0
    assert all(symfun.sigma_reduced(0, i, [4, 5, 6]) == 1.0 for i in range(3))
    lam = [1, 2, 3]
    assert symfun.sigma_reduced(2, 0, lam) + lam[0] * symfun.sigma_reduced(1, 0, lam) == 11.0


def test_index_errors():
    with pytest.raises(IndexRangeError):
        symfun.sigma(4, [1, 2, 3])
    with pytest.raises(IndexRangeError):
        symfun.sigma_reduced(1, 3, [1, 2, 3])
    with pytest.raises(IndexRangeError):
        symfun.sigma_reduced(3, 0, [1, 2, 3])


@given(spectra)
def test_sigma_matches_enumeration(lam):
    for j in range(len(lam) + 1):
        ref = sigma_enum(j, lam)
        assert symfun.sigma(j, lam) == pytest.approx(ref, rel=1e-12, abs=1e-12 * max(1, abs(ref)) * 10**j)


@given(spectra)
def test_two_identities(lam):
    n = len(lam)
    lam = np.array(lam)
    for k in range(1, n + 1):
        s_k = sigma_enum(k, lam)
        scale = sum(abs(lam[i] * sigma_reduced_enum(k - 1, i, lam)) for i in range(n)) + 1e-300
        lhs = sum(lam[i] * symfun.sigma_reduced(k - 1, i, lam) for i in range(n)) / k
        assert abs(lhs - s_k) <= 1e-12 * scale
        for i in range(n):
            if k <= n - 1:
                split = symfun.sigma_reduced(k, i, lam) + lam[i] * symfun.sigma_reduced(k - 1, i, lam)
            else:
                split = lam[i] * symfun.sigma_reduced(k - 1, i, lam)
            assert abs(split - s_k) <= 1e-12 * (scale + abs(s_k))


def test_gamma_k_examples():
    assert symfun.in_gamma_k(3, [1, 1, 1])
    assert not symfun.in_gamma_k(2, [-1, 2, 2])
    assert symfun.in_gamma_k(1, [-1, 2, 2])


def test_quotient_examples():
    assert symfun.quotient_value(QuotientIndices(3, 2, 1), [1, 1, 1]) == pytest.approx(1.0)
    assert symfun.quotient_value(QuotientIndices(3, 3, 0), [2, 2, 2]) == pytest.approx(8.0)
    for n in range(3, 9):
        for k in range(1, n + 1):
            for l in range(k):
                idx = QuotientIndices(n, k, l)
                assert symfun.quotient_value(idx, np.full(n, idx.c_star)) == pytest.approx(1.0, rel=1e-13)


def test_quotient_rejects_outside_cone():
    with pytest.raises(AdmissibilityError):
        symfun.quotient_value(QuotientIndices(3, 2, 1), [-1, 2, 2])


def test_division_domain_error_is_reachable_only_outside_cone():
    # sigma_l > 0 follows from Gamma_k membership, so the error is a guard; check the type exists
    assert issubclass(DivisionDomainError, ZeroDivisionError)


def test_euler_examples():
    assert symfun.euler_weighted_gradient(QuotientIndices(3, 2, 1), [1, 1, 1]) == pytest.approx(1.0)
    assert symfun.euler_weighted_gradient(QuotientIndices(3, 3, 0), [2, 2, 2]) == pytest.approx(24.0)


@given(positive, st.data())
def test_euler_and_gradient(lam, data):
    n = len(lam)
    k = data.draw(st.integers(1, n))
    l = data.draw(st.integers(0, k - 1))
    idx = QuotientIndices(n, k, l)
    S = symfun.quotient_value(idx, lam)
    assert symfun.euler_weighted_gradient(idx, lam) / S == pytest.approx(k - l, rel=1e-10)
    fd = central_diff(lambda v: quotient_enum(k, l, v), lam)
    an = symfun.quotient_gradient(idx, lam)
    assert np.allclose(an, fd, rtol=1e-5, atol=1e-7 * np.abs(fd).max())


def test_h_examples():
    assert symfun.h_cap(2, np.ones(3)) == pytest.approx(2 / 3)
    assert symfun.h_cap(3, [0.3, 2.0, 7.0]) == pytest.approx(1.0)
    assert symfun.h_floor(1, [1, 2, 3]) == pytest.approx(1 / 6)
    assert symfun.h_floor(0, [1, 2, 3]) == 0.0


@given(positive)
def test_h_cap_range_and_monotone(a):
    n = len(a)
    H = [symfun.h_cap(k, a) for k in range(1, n + 1)]
    for k in range(1, n):
        assert k / n - 1e-12 <= H[k - 1] < 1.0
    assert H[-1] == pytest.approx(1.0)
    assert all(H[m] <= H[m + 1] + 1e-12 for m in range(n - 1))


@given(positive)
def test_newton_inequality(a):
    n = len(a)
    for k in range(1, n - 1):
        lhs = symfun.sigma_reduced(k + 1, n - 1, a) * symfun.sigma_reduced(k - 1, n - 1, a)
        rhs = symfun.sigma_reduced(k, n - 1, a) ** 2
        assert lhs <= rhs * (1 + 1e-12)


def test_membership_examples():
    m = symfun.membership(QuotientIndices(5, 2, 1), np.full(5, 0.5))
    assert m.in_A and m.in_script_A and m.H_k == pytest.approx(0.4)
    m = symfun.membership(QuotientIndices(3, 2, 1), np.ones(3))
    assert m.in_A and not m.in_script_A
    m = symfun.membership(QuotientIndices(3, 3, 0), np.ones(3))
    assert m.in_A and m.in_script_A


def test_c_star_examples():
    assert symfun.c_star(QuotientIndices(3, 3, 0)) == pytest.approx(1.0)
    assert symfun.c_star(QuotientIndices(3, 2, 0)) == pytest.approx(0.5773503, abs=1e-7)
    assert symfun.c_star(QuotientIndices(5, 2, 1)) == pytest.approx(0.5)


def test_index_condition_exhaustive():
    mismatches = []
    for n in range(3, 11):
        for k in range(1, n + 1):
            for l in range(k):
                idx = QuotientIndices(n, k, l)
                got = symfun.membership(idx, np.full(n, idx.c_star)).in_script_A
                if got != idx.index_condition_holds:
                    mismatches.append(idx.as_tuple())
    assert mismatches == []


def test_index_condition_algebra():
    # for c* I the weights are k/n, so the admissible test reduces to 2k < n(k - l)
    for n in range(3, 11):
        for k in range(1, n + 1):
            for l in range(k):
                assert QuotientIndices(n, k, l).index_condition_holds == (2 * k < n * (k - l))


def test_types_validate():
    with pytest.raises(ValueError):
        QuotientIndices(2, 1, 0)
    with pytest.raises(ValueError):
        QuotientIndices(4, 2, 2)
    with pytest.raises(AdmissibilityError):
        SpdDiagonal([1.0, 0.0, 2.0])
    assert np.all(Spectrum([3, 1, 2]).values == [1, 2, 3])
    d = SpdDiagonal([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        d.a[0] = 5.0


def test_scale_to_surface():
    idx = QuotientIndices(4, 3, 1)
    a = symfun.scale_to_surface(idx, [0.5, 1.0, 1.5, 2.0])
    assert symfun.quotient_value(idx, a) == pytest.approx(1.0, rel=1e-13)
    assert symfun.script_H(idx, np.full(4, idx.c_star)) == pytest.approx(2 * 4 / (2 * 3))
    assert math.isclose(symfun.h_cap(3, np.full(4, 7.0)), 0.75)
