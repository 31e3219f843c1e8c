import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from amenlab import density as D
from amenlab.wobbling import TableMap, compose, identity, shift, swap

# 40-digit mpmath values of prod_j (1 + a_j a_{j+1}) / (1 + a_j^2)
SHIFT_CORRELATION = {
    4: 0.9578797610807979008,
    64: 0.9972960835537424944,
}


def _enumeration_oracle(n, g, W):
    """E[f(x o g) f(x)] / E[f^2] over all configurations of [-W, W]."""
    coords = np.arange(-W, W + 1)
    X = np.array(list(itertools.product((0, 1), repeat=coords.size)), dtype=float)
    c = n * np.exp(-np.abs(coords) / n)
    f = np.exp(-X @ c)
    perm = np.array([g(int(j)) + W for j in coords])
    fg = np.exp(-X[:, perm] @ c)
    return float(np.mean(f * fg) / np.mean(f * f))


def _mp_shift_correlation(n, J=4000):
    mpmath.mp.dps = 30
    n = mpmath.mpf(n)
    a = lambda j: mpmath.exp(-n * mpmath.exp(-abs(j) / n))
    return float(mpmath.exp(mpmath.fsum(mpmath.log((1 + a(j) * a(j + 1)) / (1 + a(j) ** 2)) for j in range(-J, J + 1))))


def test_coefficient_examples():
    assert D.coefficient(1, 0) == pytest.approx(0.3678794, abs=1e-7)
    assert D.coefficient(2, 0) == pytest.approx(0.1353353, abs=1e-7)
    for n in (1, 3, 17):
        for j in range(40):
            assert D.coefficient(n, j) == D.coefficient(n, -j)
            assert 0 < D.coefficient(n, j) <= 1


def test_conditioned_norm_ratio():
    assert D.conditioned_norm_ratio(1) == pytest.approx(0.8807971, abs=1e-7)
    assert D.conditioned_norm_ratio(10) > 1 - 1e-8
    for k in (1, 2, 4, 8):
        assert D.conditioned_norm_ratio(2 * k) > D.conditioned_norm_ratio(k)
    for n in range(1, 65):
        assert 0.5 < D.conditioned_norm_ratio(n) <= 1
    # 1 - ratio = e^{-2n}/(1+e^{-2n}) drops below double resolution at n = 19
    for n in range(1, 19):
        assert D.conditioned_norm_ratio(n) < 1


def test_conditioned_norm_ratio_by_enumeration():
    # ||f 1_{x0=0}||^2 / ||f||^2 on a small window; the other coordinates cancel
    n, W = 2, 4
    coords = np.arange(-W, W + 1)
    X = np.array(list(itertools.product((0, 1), repeat=coords.size)), dtype=float)
    f2 = np.exp(-2 * X @ (n * np.exp(-np.abs(coords) / n)))
    ratio = f2[X[:, W] == 0].sum() / f2.sum()
    assert ratio == pytest.approx(D.conditioned_norm_ratio(n), abs=1e-14)


def test_correlation_identity_exact():
    for n in (1, 7, 64):
        v = D.correlation_ratio(n, identity())
        assert v.value == 1.0 and v.error_bound == 0.0


def test_correlation_matches_enumeration():
    g = swap(0, 1)
    v = D.correlation_ratio(1, g, radius=6)
    assert v.value == pytest.approx(_enumeration_oracle(1, g, 6), abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(perm=st.permutations(list(range(-4, 5))), n=st.integers(1, 6))
def test_correlation_oracle_random_tables(perm, n):
    g = TableMap(dict(zip(range(-4, 5), perm)))
    v = D.correlation_ratio(n, g, radius=6)
    assert v.value == pytest.approx(_enumeration_oracle(n, g, 6), abs=1e-10)


def test_correlation_shift_high_precision():
    for n, ref in SHIFT_CORRELATION.items():
        v = D.correlation_ratio(n, shift(), 1e-12)
        assert abs(v.value - ref) <= v.error_bound + 1e-14
    assert D.correlation_ratio(8, shift()).value == pytest.approx(_mp_shift_correlation(8), abs=1e-13)


def test_correlation_shift_tends_to_one():
    gaps = [1 - D.correlation_ratio(n, shift()).value for n in (1, 2, 4, 8, 16, 32, 64)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] == pytest.approx(1 - SHIFT_CORRELATION[64], abs=1e-13)


def test_certified_truncation_doubling(pool):
    for g in pool.values():
        for n in (1, 4, 16):
            v = D.correlation_ratio(n, g, 1e-9)
            w = D.correlation_ratio(n, g, radius=2 * v.truncation_radius + 1)
            assert abs(v.value - w.value) <= v.error_bound + 1e-15
            f = D.F_n(n, g, 1e-11)
            h = D.F_n(n, g, radius=2 * f.truncation_radius + 1)
            assert abs(f.value - h.value) <= f.error_bound + 1e-15


def test_large_displacement_constants_stay_finite():
    g = compose(shift(8), swap(0, 3))
    v = D.correlation_ratio(2, g, 1e-10)
    assert math.isfinite(v.value) and v.error_bound <= 1e-10
    assert D.c_double_prime(8) == math.inf
    assert D.log_c_double_prime(8) == pytest.approx(math.log(8 + math.e ** 8) + 8 + math.e ** 8)
    assert D.eta_theta(g, 2, 3).bounds_pass


def test_precision_floor():
    with pytest.raises(D.PrecisionError):
        D.correlation_ratio(4, shift(), 1e-16)


def test_F_n_examples():
    assert D.F_n(3, identity()).value == 0.0
    assert D.F_n(1, shift()).value == pytest.approx(0.1192029, abs=1e-7)
    for n in (1, 2, 4, 8, 16):
        assert D.F_n(n, shift()).value == pytest.approx(math.exp(-2 * n) / (1 + math.exp(-2 * n)), abs=1e-12)


def test_F_n_direct_series():
    for g in (swap(0, 5), swap(-3, -7), compose(swap(0, 5), swap(2, -4))):
        j = np.arange(-40, 41)
        a = D.coefficient(1.0, j)
        gj = np.array([g(int(x)) for x in j])
        direct = math.fsum(a * a / (1 + a * a) * np.exp(-np.abs(j)) * (np.abs(gj) - np.abs(j)))
        assert D.F_n(1, g).value == pytest.approx(direct, abs=1e-12)


def test_F_n_shift_unpaired_series():
    n = 3
    j = np.arange(-600, 601)
    a = D.coefficient(n, j)
    direct = math.fsum(a * a / (1 + a * a) * np.exp(-np.abs(j) / n) * (np.abs(j + 1) - np.abs(j)))
    assert D.F_n(n, shift()).value == pytest.approx(direct, abs=1e-13)


def test_b_profile_examples():
    assert D.b_profile(shift(), 5) == [(1, 1)] + [(0, 1)] * 5
    assert D.b_profile(identity(), 4) == [(0, 0)] * 5
    prof = D.b_profile(swap(0, 5), 8)
    assert [b for b, _ in prof] == [5, 0, 0, 0, 0, -5, 0, 0, 0]
    assert [B for _, B in prof] == [5] * 5 + [0] * 4


def test_lemma_B_examples():
    r = D.check_lemma_B(shift(), range(2, 51))
    assert r.passed and set(r.values.values()) == {1} and (r.lower, r.upper) == (-2, 4)
    r = D.check_lemma_B(swap(0, 5), range(6, 51))
    assert r.passed and set(r.values.values()) == {0} and (r.lower, r.upper) == (-50, 100)
    assert D.check_lemma_B(identity(), range(1, 10)).passed
    with pytest.raises(ValueError):
        D.check_lemma_B(shift(), [1])


@settings(max_examples=40, deadline=None)
@given(perm=st.permutations(list(range(-5, 6))), k=st.integers(-3, 3))
def test_lemma_B_random_maps(perm, k):
    g = compose(shift(k), TableMap(dict(zip(range(-5, 6), perm))))
    m = g.bound
    assert D.check_lemma_B(g, range(m + 1, m + 60)).passed


def test_lemma_B_counterexample_reported():
    class Fake:
        bound = 1
        def displacements(self, lo, hi):
            return np.array([5 if j == 0 else 0 for j in range(lo, hi + 1)])
    r = D.check_lemma_B(Fake(), [2, 3])
    assert not r.passed and r.counterexamples


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64])
def test_lemma_sum(n):
    r = D.check_lemma_sum(n)
    assert r.passed
    assert r.S1.value <= 3 and r.S2.value <= 1 / n


def test_lemma_sum_against_quadrature():
    n = 5
    f = lambda t: math.exp(-n * math.exp(-t / n)) * math.exp(-t / n)
    integral, _ = integrate.quad(f, 0, np.inf)
    assert integral == pytest.approx(1 - math.exp(-n), rel=1e-9)


def test_log_inequality():
    assert D.LOG_CONSTANT == pytest.approx(4 * math.log(2) - 2)
    r = D.check_log_inequality([0.0])
    assert r.passed and r.min_upper_margin == 0.0 and r.min_lower_margin == 0.0
    assert -0.5 - D.LOG_CONSTANT / 4 <= math.log(0.5) + 1e-15
    assert D.check_log_inequality(np.linspace(-0.5, 10, 10_000)).passed
    with pytest.raises(ValueError):
        D.check_log_inequality([-0.6])


def test_log_inequality_catches_wrong_constant(monkeypatch):
    monkeypatch.setattr(D, "LOG_CONSTANT", 0.3)
    assert not D.check_log_inequality(np.linspace(-0.5, 0, 100)).passed


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.5, 1e6))
def test_log_inequality_property(z):
    assert D.check_log_inequality([z]).passed


def test_eta_theta_examples():
    e = D.eta_theta(identity(), 3, 7)
    assert e.eta == 0 and e.theta == 0 and e.bounds_pass
    e = D.eta_theta(shift(), 4, 10)
    closed = 4 * (1 - math.exp(-1 / 4)) - 1
    assert e.eta == pytest.approx(closed, abs=1e-15)
    assert abs(e.eta) <= math.e / 4 and e.bounds_pass
    assert D.eta_theta(swap(0, 5), 2, 0).bounds_pass


def test_eta_theta_pool_grid(pool):
    for g in list(pool.values()) + [swap(0, 5), identity()]:
        for n in range(1, 17):
            assert all(D.eta_theta(g, n, j).bounds_pass for j in range(-200, 201))


def test_decompose_sum2():
    z = D.decompose_sum2(5, identity())
    assert (z.main, z.eta_term, z.theta_term) == (0.0, 0.0, 0.0)
    z = D.decompose_sum2(8, shift())
    assert z.main == pytest.approx(D.F_n(8, shift()).value, abs=1e-12)
    assert z.passed
    for g in (swap(0, 5), shift(), compose(shift(2), swap(0, 3))):
        for n in (1, 3, 9):
            z = D.decompose_sum2(n, g)
            assert z.passed
            assert z.main + z.eta_term + z.theta_term == pytest.approx(z.direct, abs=1e-9)


def test_abel_check():
    r = D.abel_check(identity(), 3, 10)
    assert r.lhs == 0 and r.rhs == 0
    r = D.abel_check(shift(), 2, 100)
    assert r.passed and r.lhs == pytest.approx(D.psi(2, 0), abs=1e-15)
    r = D.abel_check(swap(0, 5), 1, 50)
    assert r.passed
    assert r.lhs == pytest.approx(5 * D.psi(1, 0) - 5 * D.psi(1, 5), abs=1e-15)


def test_vanishing_integrals_match_F_n_and_quadrature(pool):
    for g in (shift(), swap(0, 5), pool["swap01"]):
        for n in (2, 8):
            v = D.vanishing_integrals(g, n)
            assert v.F == pytest.approx(D.F_n(n, g).value, abs=1e-10)
            assert abs(v.first) <= v.first_bound + v.error_bound
            assert abs(v.second) <= v.second_bound + v.error_bound
    # closed-form psi integral against quadrature
    n = 3
    num, _ = integrate.quad(lambda t: D.psi(n, t), 2.0, 7.0)
    assert D._psi_integral(n, np.array(2.0), np.array(7.0)) == pytest.approx(num, abs=1e-12)


def test_pool_trends(pool):
    for name, g in pool.items():
        gaps = [abs(1 - D.correlation_ratio(n, g).value) for n in (4, 16, 64)]
        fns = [abs(D.F_n(n, g).value) for n in (4, 16, 64)]
        assert gaps[0] > gaps[1] > gaps[2], name
        assert gaps[2] < 0.05, name
        assert fns[0] > fns[1] > fns[2], name
        f1 = D.F_n(1, g).value
        if f1 != 0:
            assert abs(D.F_n(64, g).value) < abs(f1)
