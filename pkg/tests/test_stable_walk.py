import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from lrpolymer import stable_walk as sw
from lrpolymer.rng import substream


def test_gaussian_law_atoms(law2):
    vals, probs = law2.support_values()
    assert list(vals) == [-2, -1, 0, 1, 2]
    assert np.array_equal(probs, [1 / 16, 1 / 4, 3 / 8, 1 / 4, 1 / 16])
    assert law2.total_mass() == 1.0


def test_gaussian_law_unit_variance(law2):
    vals, probs = law2.support_values()
    assert math.isclose(float(np.sum(vals**2 * probs)), 1.0, rel_tol=0, abs_tol=1e-15)


def test_heavy_law_mass_and_tail(law15):
    assert abs(law15.total_mass() - 1.0) < 1e-12
    assert law15.tail_mass < sw.MAX_TAIL_MASS
    k = np.array([10, 1000, 10**6, 10**7])
    assert np.allclose(law15.weight(k), law15.tail_coef * k ** -2.5, rtol=1e-14)


def test_rejects_bad_index():
    with pytest.raises(ValueError):
        sw.build_increment_law(1.0)
    with pytest.raises(ValueError):
        sw.build_increment_law(2.5)


def test_char_fn_gaussian_closed_form(law2):
    u = np.linspace(-3, 3, 13)
    ref = 3 / 8 + 0.5 * np.cos(u) + 0.125 * np.cos(2 * u)
    assert np.allclose(sw.char_fn(law2, u), ref, atol=1e-15)


def test_one_minus_char_fn_small_argument(law2):
    # 1 - psi(u) = sin^2(u/2) + sin^2(u)/4 exactly for the five-atom law
    u = 1e-6
    ref = float(mpmath.sin(u / 2) ** 2 + mpmath.sin(u) ** 2 / 4)
    assert math.isclose(sw.one_minus_char_fn(law2, u), ref, rel_tol=1e-12)


def test_calibration_gaussian(law2):
    assert math.isclose(sw.calibrate_c_rho(law2), 0.5, rel_tol=1e-8)


def test_calibration_heavy_matches_analytic(law15):
    # 1 - psi(u) ~ (1 - p0) / zeta(1 + rho) * (-Gamma(-rho) cos(pi rho / 2)) |u|^rho
    rho = 1.5
    ref = (1 - 0.5) / special.zeta(1 + rho) * (-special.gamma(-rho) * math.cos(math.pi * rho / 2))
    assert math.isclose(sw.calibrate_c_rho(law15), ref, rel_tol=1e-5)


def test_kernel_matches_repeated_convolution(law2):
    vals, probs = law2.support_values()
    p = np.ones(1)
    for _ in range(7):
        p = np.convolve(p, probs)
    k = sw.transition_kernel(law2, 7, window=14)
    assert np.allclose(k(np.arange(-14, 15)), p, atol=1e-16)
    assert k.tail_mass == 0.0


@given(st.integers(0, 300))
@settings(max_examples=25, deadline=None)
def test_kernel_mass_conservation(n):
    law = sw.build_increment_law(2.0)
    k = sw.transition_kernel(law, n)
    assert abs(math.fsum(k.probs) + k.tail_mass - 1.0) < 1e-12
    assert np.allclose(k.probs, k.probs[::-1], atol=1e-17)


def test_heavy_kernel_mass_and_symmetry(law15):
    k = sw.transition_kernel(law15, 64)
    assert abs(math.fsum(k.probs) + k.tail_mass - 1.0) < 1e-12
    assert np.allclose(k.probs, k.probs[::-1], rtol=1e-10, atol=1e-18)


def test_heavy_kernel_against_fourier_inversion(law15):
    # P_n(0) = (1/pi) int_0^pi psi(u)^n du
    n = 16
    ref, _ = integrate.quad(lambda u: sw.char_fn(law15, u) ** n, 0, math.pi, epsabs=1e-13, limit=200)
    k = sw.transition_kernel(law15, n)
    assert abs(k(0) - ref / math.pi) < 1e-6


def test_return_probabilities_consistent(law2):
    r, err = sw.return_probabilities(law2, 40)
    for s in (1, 2, 17, 80):
        assert abs(r[s] - sw.transition_kernel(law2, s, window=2 * s)(0)) < 1e-14
    assert r[0] == 1.0 and np.all(err < 1e-30)


def test_kernel_bound_ratio_bounded(law15):
    ratios = [sw.kernel_bound_ratio(sw.transition_kernel(law15, n), 1.5) for n in (16, 64, 256)]
    assert max(ratios) < 5.0


def test_sampler_frequencies(law2):
    y = sw.sample_increments(law2, 200000, substream(3))
    vals, probs = law2.support_values()
    for v, p in zip(vals, probs):
        f = np.mean(y == v)
        assert abs(f - p) < 4 * math.sqrt(p * (1 - p) / len(y))


def test_sampler_heavy_tail_frequency(law15):
    y = sw.sample_increments(law15, 400000, substream(4))
    p = law15.tail_mass
    f = np.mean(np.abs(y) > law15.cutoff)
    assert abs(f - p) < 4 * math.sqrt(p / len(y)) + 1e-6
    p3 = 2 * law15.weight(3)
    f3 = np.mean(np.abs(y) == 3)
    assert abs(f3 - p3) < 4 * math.sqrt(p3 / len(y))


def test_sample_path_starts_at_origin(law2):
    path = sw.sample_path(law2, 100, 5, substream(8))
    assert len(path) == 100
    assert abs(path[0] - 5) <= 2


def test_gaussian_density():
    sd = sw.StableDensity(2.0, 0.5)
    x = np.linspace(-3, 3, 7)
    assert np.allclose(sw.stable_density(sd, 0.7, x), stats.norm.pdf(x, scale=math.sqrt(0.7)), rtol=1e-13)


@pytest.mark.parametrize("x", [0.0, 0.4, 1.3, 4.0, 20.0])
def test_heavy_density_against_scipy(x):
    # exp(-c |u|^alpha) is the levy_stable law with scale c^(1/alpha)
    c, a = 0.7, 1.5
    sd = sw.StableDensity(a, c)
    ref = stats.levy_stable.pdf(x, a, 0.0, scale=c ** (1 / a))
    assert math.isclose(sw.stable_density(sd, 1.0, x), ref, rel_tol=2e-4)


def test_heavy_density_normalized():
    sd = sw.StableDensity(1.5, 0.62)
    tot = 2 * integrate.quad(lambda x: sw.stable_density(sd, 1.0, x), 0, np.inf, limit=400)[0]
    assert abs(tot - 1) < 1e-5


def test_density_scaling():
    sd = sw.StableDensity(1.5, 0.62)
    t, x = 0.3, 0.8
    lhs = sw.stable_density(sd, t, x)
    rhs = t ** (-1 / 1.5) * sw.stable_density(sd, 1.0, x * t ** (-1 / 1.5))
    assert math.isclose(lhs, rhs, rel_tol=1e-12)


def test_density_at_zero():
    sd = sw.StableDensity(1.5, 0.62)
    ref = special.gamma(1 + 1 / 1.5) / (math.pi * 0.62 ** (1 / 1.5))
    assert math.isclose(sd.at_zero(1.0), ref, rel_tol=1e-12)


def test_llt_residual_gaussian_small(law2):
    assert sw.llt_residual(law2, 1024) < 1e-4


def test_char_fn_special_points(law2, law15):
    assert sw.char_fn(law2, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert sw.char_fn(law2, math.pi) == pytest.approx(0.0, abs=1e-15)
    assert sw.char_fn(law15, 2 * math.pi) == pytest.approx(1.0, abs=1e-12)


def test_char_fn_strictly_inside_disc(law2, law15):
    u = np.linspace(-math.pi, math.pi, 10001)
    u = u[np.abs(u) >= 1e-3]
    assert np.max(np.abs(sw.char_fn(law2, u))) < 1.0
    # each heavy-law evaluation sums a 10^6-term table, so use a coarser grid
    v = np.concatenate((np.geomspace(1e-3, math.pi, 150), -np.geomspace(1e-3, math.pi, 50)))
    assert np.max(np.abs(sw.char_fn(law15, v))) < 1.0


def test_pareto_ratio(law15):
    assert math.isclose(law15.weight(3) / law15.weight(1), 3**-2.5, rel_tol=1e-14)


def test_calibration_against_brute_series(law15):
    # direct (not cancellation-safe) series at u = 1e-4, independent of the library routine
    u = 1e-4
    k = np.arange(1, law15.cutoff + 1, dtype=float)
    head = 2.0 * math.fsum(law15.table[1:] * 2.0 * np.sin(0.5 * k * u) ** 2)
    tail = 2.0 * law15.tail_coef * float(mpmath.quadosc(lambda x: (1 - mpmath.cos(u * x)) * x**-2.5,
                                                           [law15.cutoff + 0.5, mpmath.inf], omega=u))
    brute = (head + tail) / u**1.5
    assert abs(sw.calibrate_c_rho(law15) / brute - 1) < 0.01


def test_kernel_small_n(law2):
    k0 = sw.transition_kernel(law2, 0, window=3)
    assert k0(0) == 1.0 and k0(1) == 0.0
    k1 = sw.transition_kernel(law2, 1, window=3)
    assert np.allclose(k1(np.arange(-3, 4)), law2.weight(np.arange(-3, 4)), atol=0)
    k2 = sw.transition_kernel(law2, 2)
    assert k2(0) == pytest.approx(0.2734375, abs=1e-15)


def test_kernel_doubling_consistency(law15):
    n, W = 32, 600
    kn = sw.transition_kernel(law15, n, window=W)
    k2n = sw.transition_kernel(law15, 2 * n, window=W)
    self_conv = np.convolve(kn.probs, kn.probs)[W: 3 * W + 1]
    assert np.max(np.abs(self_conv - k2n.probs)) <= 2 * kn.tail_mass + k2n.tail_mass


def test_kernel_window_too_small(law15):
    with pytest.raises(sw.KernelWindowError):
        sw.transition_kernel(law15, 4096, window=10)


def test_path_determinism_and_centering(law2):
    a = sw.sample_path(law2, 50, 0, substream(1))
    b = sw.sample_path(law2, 50, 0, substream(1))
    assert np.array_equal(a, b)
    ends = np.array([sw.sample_path(law2, 20, 3, substream(2, i))[-1] for i in range(2000)]) - 3
    assert abs(ends.mean()) < 3 * math.sqrt(20 / 2000)


def test_first_step_atom_frequency(law2):
    y = sw.sample_increments(law2, 10**6, substream(12))
    assert abs(np.mean(y == 0) - 0.375) < 3 * math.sqrt(0.375 * 0.625 / 10**6)


@given(st.floats(0.05, 5.0), st.floats(-4.0, 4.0))
@settings(max_examples=100, deadline=None)
def test_scaling_identity_random(t, x):
    sd = sw.StableDensity(1.5, 0.62)
    lhs = sw.stable_density(sd, t, x)
    rhs = t ** (-1 / 1.5) * sw.stable_density(sd, 1.0, t ** (-1 / 1.5) * x)
    assert math.isclose(lhs, rhs, rel_tol=1e-10, abs_tol=1e-14)


def test_gaussian_density_at_zero():
    assert sw.StableDensity(2.0, 0.5).at_zero(1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_heavy_density_symmetric_unimodal():
    sd = sw.StableDensity(1.5, 0.62)
    x = np.linspace(0, 30, 301)
    g = sw.stable_density(sd, 1.0, x)
    assert np.allclose(g, sw.stable_density(sd, 1.0, -x), rtol=1e-14)
    assert np.all(np.diff(g) <= 1e-15)


def test_llt_residual_shrinks_from_one_step(law2):
    assert sw.llt_residual(law2, 4096) < sw.llt_residual(law2, 1)
