import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import eval_hermitenorm

from lrpolymer import wick_algebra as wa
from lrpolymer.rng import substream


def _random_family(rng, d):
    L = rng.standard_normal((d, d))
    return wa.GaussianFamily(L @ L.T + 0.1 * np.eye(d)).with_sample(rng.standard_normal(d))


def test_brute_matches_recursive_200_cases():
    rng = substream(2024)
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 6))
        fam = _random_family(rng, d)
        A = list(rng.integers(0, d, size=int(rng.integers(0, 9))))
        a, b = wa.wick_value_brute(fam, A), wa.wick_value_recursive(fam, A)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    assert worst < 1e-10


def test_empty_and_singleton():
    fam = wa.GaussianFamily(np.eye(2)).with_sample([0.3, -1.2])
    assert wa.wick_value(fam, []) == 1.0
    assert wa.wick_value(fam, [1]) == -1.2


def test_gaussian_fourth_moment_is_three():
    assert wa.gaussian_moment(wa.GaussianFamily(np.eye(1)), [0, 0, 0, 0]) == 3.0


def test_isserlis_mixed():
    Q = np.array([[2.0, 0.5, 0.1], [0.5, 1.0, -0.3], [0.1, -0.3, 1.5]])
    fam = wa.GaussianFamily(Q)
    ref = Q[0, 1] * Q[2, 2] + 2 * Q[0, 2] * Q[1, 2]
    assert wa.gaussian_moment(fam, [0, 1, 2, 2]) == pytest.approx(ref, rel=1e-14)
    assert wa.gaussian_moment(fam, [0, 1, 2]) == 0.0


def test_pair_partition_count():
    for n in range(0, 11, 2):
        count = sum(1 for _ in wa.pair_partitions(range(n)))
        assert count == math.prod(range(1, n, 2))
    assert list(wa.pair_partitions(range(3))) == []


@pytest.mark.parametrize("A,B", [([0], []), ([0, 1], [0]), ([0, 0, 1], [1]), ([1], [0, 0, 1])])
def test_orthogonality_of_different_orders(A, B):
    fam = wa.GaussianFamily(np.array([[1.0, 0.3], [0.3, 2.0]]))
    assert wa.wick_pair_expectation(fam, A, B) == 0.0


def test_pair_expectation_matches_monte_carlo():
    Q = np.array([[1.0, 0.4], [0.4, 0.8]])
    fam = wa.GaussianFamily(Q)
    X = fam.draw(substream(3), 200_000)
    # :X0 X1: = X0 X1 - Q01 and :X0 X0: = X0^2 - Q00
    v = (X[:, 0] * X[:, 1] - Q[0, 1]) * (X[:, 0] ** 2 - Q[0, 0])
    exact = wa.wick_pair_expectation(fam, [0, 1], [0, 0])
    assert exact == pytest.approx(2 * Q[0, 0] * Q[0, 1])
    assert abs(v.mean() - exact) < 4 * v.std() / math.sqrt(len(v))


@pytest.mark.parametrize("m", range(9))
def test_hermite_link(m):
    for x, s2 in [(0.7, 2.3), (-1.4, 0.5), (0.0, 1.0)]:
        fam = wa.GaussianFamily(np.array([[s2]])).with_sample([x])
        ref = s2 ** (m / 2) * wa.hermite(m, x / math.sqrt(s2))
        assert wa.wick_value(fam, [0] * m) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@given(st.integers(0, 12), st.floats(-5, 5))
def test_hermite_matches_scipy(m, x):
    assert wa.hermite(m, x) == pytest.approx(eval_hermitenorm(m, x), rel=1e-10, abs=1e-8)


@given(st.integers(0, 10), st.floats(-4, 4), st.floats(0.05, 4))
def test_wick_power_matches_scaled_hermite(m, y, var):
    ref = var ** (m / 2) * wa.hermite(m, y / math.sqrt(var))
    assert float(wa.wick_power(y, var, m)) == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_wick_power_at_zero_variance_is_plain_power():
    y = np.array([-1.5, 0.2, 3.0])
    for m in range(6):
        np.testing.assert_allclose(wa.wick_power(y, np.zeros(3), m), y**m)


def test_wick_value_has_mean_zero():
    fam = wa.GaussianFamily(np.array([[1.0, 0.6], [0.6, 1.3]]))
    X = fam.draw(substream(11), 50_000)
    vals = np.array([wa.wick_value(fam.with_sample(x), [0, 1, 1]) for x in X[:20_000]])
    assert abs(vals.mean()) < 4 * vals.std() / math.sqrt(len(vals))


def test_set_partition_count_is_bell():
    bell = [1, 1, 2, 5, 15, 52]
    for n, b in enumerate(bell):
        assert sum(1 for _ in wa.set_partitions(range(n))) == b


def test_empirical_cumulants_of_gaussian():
    Q = np.array([[1.0, 0.5], [0.5, 2.0]])
    X = wa.GaussianFamily(Q).draw(substream(5), 100_000)
    assert wa.empirical_cumulant(X, [0, 1]) == pytest.approx(0.5, abs=0.03)
    for A in ([0, 0, 1], [0, 1, 1, 0]):
        k = wa.empirical_cumulant(X, A)
        se = wa.cumulant_sample_stderr(X, A)
        assert abs(k) < 4 * se + 1e-3


def test_size_guards():
    fam = wa.GaussianFamily(np.eye(1)).with_sample([1.0])
    with pytest.raises(wa.SizeGuardError):
        wa.wick_value(fam, [0] * (wa.WICK_MAX + 1))
    with pytest.raises(wa.SizeGuardError):
        wa.gaussian_moment(fam, [0] * (wa.WICK_MAX + 2))
    with pytest.raises(wa.SizeGuardError):
        wa.wick_pair_expectation(fam, [0] * 9, [0] * 9)
    with pytest.raises(wa.SizeGuardError):
        wa.empirical_cumulant(np.zeros((2000, 1)), [0] * 5)
    with pytest.raises(ValueError):
        wa.empirical_cumulant(np.zeros((10, 1)), [0])


def test_family_validation():
    with pytest.raises(ValueError):
        wa.GaussianFamily(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        wa.GaussianFamily(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        wa.wick_value(wa.GaussianFamily(np.eye(1)), [0])
    with pytest.raises(ValueError):
        wa.wick_value(wa.GaussianFamily(np.eye(1), mean=np.ones(1)).with_sample([0.0]), [0])
    with pytest.raises(ValueError):
        wa.wick_value(wa.GaussianFamily(np.eye(1)).with_sample([0.0]), [0], method="nope")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 7))
def test_recursion_is_symmetric_in_index_order(seed, n):
    rng = substream(seed)
    fam = _random_family(rng, 3)
    A = list(rng.integers(0, 3, size=n))
    perm = list(rng.permutation(A))
    a, b = wa.wick_value(fam, A), wa.wick_value(fam, perm)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)
