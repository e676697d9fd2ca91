import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrpolymer import disorder as dz
from lrpolymer import kernel_space as ks
from lrpolymer import polymer as pm
from lrpolymer import stable_walk as sw
from lrpolymer.rng import substream


def _exact_S1(params, field, law):
    """``beta_hat * sum_n sum_k P(S_n = k) omega(n, k)`` from the n-step kernels."""
    N, total = params.N, 0.0
    for n in range(1, N + 1):
        kern = sw.transition_kernel(law, N + 1 - n)
        sites = params.K + kern.support
        total += float(np.dot(kern.probs, [field.omega_at(n, int(k)) for k in sites]))
    return params.beta_hat * total


def test_beta_hat_scaling():
    for N in (1, 7, 256):
        p = pm.PolymerParams(N, 0.5, 0.85, 2.0)
        assert p.beta_hat * N**p.theta == pytest.approx(0.5, rel=1e-14)
    assert pm.PolymerParams(4, 0.5, 0.85, 2.0).theta == pytest.approx(0.6)


def test_gate():
    pm.check_gate(0.85, 2.0, "stratonovich")
    pm.check_gate(0.6, 1.5, "skorohod")
    with pytest.raises(pm.GateError, match="strictly"):
        pm.check_gate(0.75, 2.0, "stratonovich")
    for args in [(0.5, 2.0, "skorohod"), (0.8, 1.0, "skorohod"), (0.8, 2.5, "skorohod"), (0.8, 2.0, "ito")]:
        with pytest.raises(pm.GateError):
            pm.check_gate(*args)


def test_pinned_paths_shape_and_endpoint(law2):
    p = pm.PolymerParams(10, 0.5, 0.85, 2.0, x0=0.9)
    P = pm.pinned_paths(p, law2, 500, substream(1))
    assert P.shape == (500, 10)
    assert p.K == round(10**0.5 * 0.9)
    vals, _ = law2.support_values()
    assert set(np.unique(P[:, -1] - p.K)) <= set(vals.tolist())
    assert set(np.unique(np.diff(P, axis=1))) <= set(vals.tolist())


def test_pinned_paths_marginal_matches_kernel(law2):
    p = pm.PolymerParams(6, 0.5, 0.85, 2.0)
    P = pm.pinned_paths(p, law2, 200_000, substream(2))
    kern = sw.transition_kernel(law2, 6)
    freq = np.array([np.mean(P[:, 0] == k) for k in kern.support])
    se = np.sqrt(kern.probs * (1 - kern.probs) / len(P)) + 1e-12
    assert np.max(np.abs(freq - kern.probs) / se) < 5


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 60))
def test_local_time_matches_brute(seed, N):
    law = sw.build_increment_law(2.0)
    rng = substream(seed)
    gam = dz.TemporalCovariance(0.7).table(N)
    path = sw.sample_path(law, N, 0, rng)
    assert pm.intersection_local_time(gam, path) == pytest.approx(pm.intersection_local_time_brute(gam, path),
                                                                    rel=1e-12)
    q = sw.sample_path(law, N, 1, rng)
    assert pm.mutual_local_time(gam, path, q) == pytest.approx(pm.mutual_local_time_brute(gam, path, q),
                                                               rel=1e-12, abs=1e-14)


def test_local_time_batch_and_bounds(law2):
    N = 40
    cov = dz.TemporalCovariance(0.85)
    P = pm.pinned_paths(pm.PolymerParams(N, 1, 0.85, 2.0), law2, 50, substream(3))
    L = pm.intersection_local_time(cov, P)
    ref = [pm.intersection_local_time_brute(cov, row) for row in P]
    np.testing.assert_allclose(L, ref, rtol=1e-12)
    assert np.all(L >= N * cov(0) - 1e-12)
    # a constant path meets itself at every pair of times
    flat = np.zeros(N, dtype=np.int64)
    gam = cov.table(N)
    lag = np.abs(np.arange(N)[:, None] - np.arange(N)[None, :])
    assert pm.intersection_local_time(gam, flat) == pytest.approx(gam[lag].sum())


def test_gamma_table_too_short():
    with pytest.raises(ValueError):
        pm.intersection_local_time(np.ones(3), np.zeros(5, dtype=np.int64))


@pytest.mark.parametrize("mode", ["plain", "wick_corrected"])
@pytest.mark.parametrize("N,x0", [(1, 0.0), (3, 0.0), (5, 0.6)])
def test_enumeration_two_ways(law2, mode, N, x0):
    p = pm.PolymerParams(N, 0.9, 0.8, 2.0, x0)
    fld = dz.DisorderField(N, 0.8, 17)
    a = pm.enumerate_exact(p, fld, law2, mode)
    b = pm.enumerate_exact_recursive(p, fld, law2, mode)
    assert a == pytest.approx(b, rel=1e-12)


def test_enumeration_single_step_closed_form(law2):
    p = pm.PolymerParams(1, 0.7, 0.85, 2.0)
    fld = dz.DisorderField(1, 0.85, 5)
    vals, probs = law2.support_values()
    bh = p.beta_hat
    plain = sum(q * math.exp(bh * fld.omega_at(1, int(y))) for y, q in zip(vals, probs))
    assert pm.enumerate_exact(p, fld, law2, "plain") == pytest.approx(plain, rel=1e-14)
    g0 = float(dz.gamma_fgn(0.85, 0))
    assert pm.enumerate_exact(p, fld, law2, "wick_corrected") == pytest.approx(
        plain * math.exp(-0.5 * bh * bh * g0), rel=1e-14)


def test_enumeration_guards(law2, law15):
    fld = dz.DisorderField(9, 0.8, 1)
    with pytest.raises(ValueError):
        pm.enumerate_exact(pm.PolymerParams(9, 0.5, 0.8, 2.0), fld, law2, "plain")
    with pytest.raises(ValueError):
        pm.enumerate_exact(pm.PolymerParams(2, 0.5, 0.8, 1.5), fld, law15, "plain")
    with pytest.raises(ValueError):
        pm.enumerate_exact(pm.PolymerParams(2, 0.5, 0.8, 2.0), fld, law2, "other")


def test_estimate_partition_matches_enumeration(law2):
    p = pm.PolymerParams(5, 0.8, 0.85, 2.0)
    fld = dz.DisorderField(5, 0.85, 23)
    for mode in ("plain", "wick_corrected"):
        est = pm.estimate_partition(p, fld, law2, 40_000, mode, substream(4))
        exact = pm.enumerate_exact(p, fld, law2, mode)
        assert abs(est.value - exact) < 4 * est.stderr
    with pytest.raises(ValueError):
        pm.estimate_partition(p, fld, law2, 1, "plain", substream(4))


def test_beta_zero_partition_is_one(law2):
    p = pm.PolymerParams(32, 0.0, 0.8, 2.0)
    e = pm.estimate_partition(p, dz.DisorderField(32, 0.8, 1), law2, 64, "wick_corrected", substream(7))
    assert e.value == 1.0 and e.stderr == 0.0


def test_log_mean_exp_is_shift_stable():
    x = np.array([707.0, 708.0, 706.5])
    v, se = pm.log_mean_exp(x)
    ref = np.exp(x - 707).mean()
    assert math.log(v) == pytest.approx(707 + math.log(ref), rel=1e-14)
    assert math.isfinite(se)


@pytest.mark.parametrize("H,rho", [(0.85, 2.0), (0.6, 1.5), (0.95, 2.0)])
def test_pathwise_wick_identity(H, rho):
    law = sw.build_increment_law(rho)
    p = pm.PolymerParams(64, 0.5, H, rho)
    fld = dz.DisorderField(64, H, 4)
    paths = pm.pinned_paths(p, law, 200, substream(6))
    Y, s2 = pm.path_exponents(p, fld, paths)
    diff = pm.chaos_values(Y, s2, 2, False) - pm.chaos_values(Y, s2, 2, True)
    np.testing.assert_allclose(diff, s2, rtol=0, atol=1e-12 * max(1.0, float(np.max(Y**2))))


def test_taylor_consistency(law2):
    """Path means of Y^m / m! sum to the plain partition function."""
    p = pm.PolymerParams(16, 0.6, 0.85, 2.0)
    fld = dz.DisorderField(16, 0.85, 2)
    paths = pm.pinned_paths(p, law2, 2000, substream(8))
    Y, s2 = pm.path_exponents(p, fld, paths)
    series = sum(np.mean(pm.chaos_values(Y, s2, m, False)) / math.factorial(m) for m in range(40))
    assert series == pytest.approx(np.mean(np.exp(Y)), rel=1e-12)
    wick = sum(np.mean(pm.chaos_values(Y, s2, m, True)) / math.factorial(m) for m in range(40))
    assert wick == pytest.approx(np.mean(np.exp(Y - 0.5 * s2)), rel=1e-10)


def test_chaos_term_first_order_mean_zero(law2):
    p = pm.PolymerParams(32, 0.5, 0.85, 2.0)
    vals = [pm.chaos_term(p, dz.DisorderField(32, 0.85, i), law2, 1, 16, True, substream(i)).value
            for i in range(300)]
    assert abs(np.mean(vals)) < 4 * np.std(vals) / math.sqrt(len(vals))


def test_exact_variance_single_step(law2):
    p = pm.PolymerParams(1, 0.5, 0.85, 2.0)
    v, err = pm.exact_variance_S1(p, law2)
    ref = p.beta_hat**2 * float(dz.gamma_fgn(0.85, 0)) * (9 / 64 + 2 / 16 + 2 / 256)
    assert v == pytest.approx(ref, rel=1e-14)
    assert err < 1e-14


def test_exact_variance_matches_field_sampling(law2):
    p = pm.PolymerParams(32, 0.5, 0.85, 2.0)
    v, _ = pm.exact_variance_S1(p, law2)
    s1 = np.array([_exact_S1(p, dz.DisorderField(32, 0.85, 100 + i), law2) for i in range(600)])
    se = v * math.sqrt(2.0 / (len(s1) - 1))
    assert abs(np.mean(s1)) < 4 * math.sqrt(v / len(s1))
    assert abs(np.var(s1, ddof=1) - v) < 4 * se


def test_u_statistic_first_order_variance():
    N, H, rho = 16, 0.85, 2.0
    p = pm.PolymerParams(N, 0.5, H, rho)
    grid = ks.block_average(ks.indicator_unit(1, -0.5, 0.5), N, rho)
    exact = pm.u_statistic_variance(grid, p, dz.TemporalCovariance(H))
    vals = np.array([pm.u_statistic(dz.DisorderField(N, H, i), grid, 1, p) for i in range(800)])
    assert abs(vals.mean()) < 4 * math.sqrt(exact / len(vals))
    assert abs(vals.var(ddof=1) - exact) < 4 * exact * math.sqrt(2.0 / len(vals))


def test_u_statistic_second_order_centered():
    N, H, rho = 8, 0.85, 2.0
    p = pm.PolymerParams(N, 0.5, H, rho)
    grid = ks.block_average(ks.indicator_unit(2, -0.5, 0.5), N, rho)
    vals = np.array([pm.u_statistic(dz.DisorderField(N, H, i), grid, 2, p) for i in range(800)])
    assert abs(vals.mean()) < 4 * vals.std() / math.sqrt(len(vals))
    with pytest.raises(ValueError):
        pm.u_statistic(dz.DisorderField(N, H, 0), grid, 1, p)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_second_moment_brute_vs_path_oracle(law2, N):
    p = pm.PolymerParams(N, 0.8, 0.85, 2.0)
    cov = dz.TemporalCovariance(0.85)
    exact = pm.second_moment_brute(p, law2, cov)
    est = pm.env_moment_oracle(p, law2, cov, 100_000, "second_moment_Z_tilde", substream(N))
    assert abs(est.value - exact) < 4 * est.stderr + 1e-12


def test_second_moment_brute_vs_field_average(law2):
    """Independent route: average the squared exact partition function over sampled fields."""
    N = 3
    p = pm.PolymerParams(N, 0.8, 0.85, 2.0)
    exact = pm.second_moment_brute(p, law2, dz.TemporalCovariance(0.85))
    z2 = np.array([pm.enumerate_exact(p, dz.DisorderField(N, 0.85, i), law2, "wick_corrected") ** 2
                   for i in range(3000)])
    assert abs(z2.mean() - exact) < 4 * z2.std() / math.sqrt(len(z2))


def test_mean_Z_single_step_closed_form(law2):
    p = pm.PolymerParams(1, 0.8, 0.85, 2.0)
    g0 = float(dz.gamma_fgn(0.85, 0))
    est = pm.env_moment_oracle(p, law2, dz.TemporalCovariance(0.85), 1000, "mean_Z", substream(1))
    assert est.value == pytest.approx(math.exp(0.5 * p.beta_hat**2 * g0), rel=1e-14)
    with pytest.raises(ValueError):
        pm.env_log_summands(p, law2, dz.TemporalCovariance(0.85), 10, "third", substream(1))


def test_chaos_values_zero_and_negative_variance():
    y = np.array([0.3, -1.0])
    np.testing.assert_allclose(pm.chaos_values(y, np.zeros(2), 3, True), y**3)
    with pytest.raises(ValueError):
        pm.chaos_values(y, np.array([1.0, -0.1]), 2, True)
    with pytest.raises(ValueError):
        pm.chaos_values(y, np.ones(2), -1, False)
