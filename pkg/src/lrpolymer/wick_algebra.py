"""Wick products, Hermite polynomials and Gaussian moment formulas.

Index multisets are plain sequences of integer indices into a centered
Gaussian family with covariance ``Q``; repeated indices are allowed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

WICK_MAX = 12
PAIR_MAX = 16
CUMULANT_MAX = 4
MIN_SAMPLES = 1000


class SizeGuardError(ValueError):
    """Combinatorial enumeration would be too large."""


@dataclass(frozen=True)
class GaussianFamily:
    """Centered Gaussian family ``X_1..X_dim`` with covariance ``Q``.

    Indices are 0-based.  ``sample`` is an optional realization.
    """

    Q: np.ndarray
    sample: np.ndarray | None = None
    mean: np.ndarray | None = None

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-10:
            raise ValueError("Q must be positive semidefinite")
        object.__setattr__(self, "Q", Q)
        if self.sample is not None:
            object.__setattr__(self, "sample", np.asarray(self.sample, dtype=float))

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def with_sample(self, x) -> "GaussianFamily":
        return GaussianFamily(self.Q, np.asarray(x, dtype=float), self.mean)

    def draw(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        return rng.multivariate_normal(np.zeros(self.dim), self.Q, size=size, method="eigh")


def hermite(m: int, x):
    """Probabilists' Hermite polynomial ``H_m(x)``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), x.copy()
    if m == 0:
        h = h_prev
    for k in range(1, m):
        h_prev, h = h, x * h - k * h_prev
    return h if h.ndim else float(h)


def wick_power(y, var, m: int):
    """``var^(m/2) H_m(y / sqrt(var))`` computed without dividing by ``sqrt(var)``.

    Uses ``P_{k+1} = y P_k - k var P_{k-1}``, which stays finite at ``var = 0``.
    """
    y = np.asarray(y, dtype=float)
    var = np.asarray(var, dtype=float)
    p_prev, p = np.ones_like(y), y.copy()
    if m == 0:
        return p_prev
    for k in range(1, m):
        p_prev, p = p, y * p - k * var * p_prev
    return p


def _check_family(fam: GaussianFamily, need_sample: bool = True) -> None:
    if fam.mean is not None and np.any(np.asarray(fam.mean) != 0):
        raise ValueError("only centered families are supported")
    if need_sample and fam.sample is None:
        raise ValueError("family has no realization")


def pair_partitions(items: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """All perfect matchings of positions ``0..len(items)-1``.

    The first unpaired position is always matched first, so the enumeration
    order is fixed.
    """
    pos = list(range(len(items)))

    def rec(rest):
        if not rest:
            yield []
            return
        a = rest[0]
        for j in range(1, len(rest)):
            b = rest[j]
            remaining = rest[1:j] + rest[j + 1:]
            for tail in rec(remaining):
                yield [(a, b)] + tail

    if len(pos) % 2:
        return iter(())
    return rec(pos)


def gaussian_moment(fam: GaussianFamily, A: Sequence[int]) -> float:
    """``E[X_A]`` by summing covariance products over pair partitions of ``A``."""
    A = list(A)
    if len(A) > WICK_MAX:
        raise SizeGuardError(f"|A| = {len(A)} exceeds {WICK_MAX}")
    _check_family(fam, need_sample=False)
    if len(A) % 2:
        return 0.0
    Q = fam.Q
    terms = [math.prod(Q[A[a], A[b]] for a, b in pp) for pp in pair_partitions(A)]
    return math.fsum(terms)


def wick_value_brute(fam: GaussianFamily, A: Sequence[int]) -> float:
    """``:X_A:`` as a sum over subsets ``B`` of ``A``.

    For a centered Gaussian family only pair cumulants survive, so
    ``:X_A: = sum_{B subset A} X_B * sum_{pairings pi of A minus B} (-1)^|pi| prod Q``.
    """
    A = list(A)
    if len(A) > WICK_MAX:
        raise SizeGuardError(f"|A| = {len(A)} exceeds {WICK_MAX}")
    _check_family(fam)
    x, Q = fam.sample, fam.Q
    n = len(A)
    terms = []
    for r in range(n + 1):
        for keep in itertools.combinations(range(n), r):
            rest = [A[i] for i in range(n) if i not in keep]
            if len(rest) % 2:
                continue
            xb = math.prod(x[A[i]] for i in keep)
            sign = -1.0 if (len(rest) // 2) % 2 else 1.0
            pairs = math.fsum(math.prod(Q[rest[a], rest[b]] for a, b in pp) for pp in pair_partitions(rest))
            terms.append(sign * xb * pairs)
    return math.fsum(terms)


def wick_value_recursive(fam: GaussianFamily, A: Sequence[int]) -> float:
    """``:X_A: = X_a :X_{A-a}: - sum_b Q_ab :X_{A-a-b}:`` with ``a`` the first index."""
    A = tuple(A)
    if len(A) > WICK_MAX:
        raise SizeGuardError(f"|A| = {len(A)} exceeds {WICK_MAX}")
    _check_family(fam)
    x, Q = fam.sample, fam.Q

    @lru_cache(maxsize=None)
    def rec(B: tuple) -> float:
        if not B:
            return 1.0
        a, rest = B[0], B[1:]
        val = x[a] * rec(rest)
        for j, b in enumerate(rest):
            val -= Q[a, b] * rec(rest[:j] + rest[j + 1:])
        return val

    return rec(A)


def wick_value(fam: GaussianFamily, A: Sequence[int], method: str = "recursive") -> float:
    """Value of the physical Wick product ``:X_A:`` at ``fam.sample``."""
    if method == "recursive":
        return wick_value_recursive(fam, A)
    if method == "brute":
        return wick_value_brute(fam, A)
    raise ValueError(f"unknown method {method!r}")


def wick_pair_expectation(fam: GaussianFamily, A: Sequence[int], B: Sequence[int]) -> float:
    """``E[:X_A: :X_B:]``: zero unless ``|A| = |B|``, else a sum over bijections."""
    A, B = list(A), list(B)
    if len(A) + len(B) > PAIR_MAX:
        raise SizeGuardError(f"|A| + |B| = {len(A) + len(B)} exceeds {PAIR_MAX}")
    _check_family(fam, need_sample=False)
    if len(A) != len(B):
        return 0.0
    Q = fam.Q
    return math.fsum(math.prod(Q[a, B[j]] for a, j in zip(A, perm)) for perm in itertools.permutations(range(len(B))))


def set_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    """All set partitions of ``items`` (as lists of blocks)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def empirical_cumulant(samples: np.ndarray, A: Sequence[int]) -> float:
    """Joint cumulant ``kappa(X_A)`` from rows of ``samples`` by Moebius inversion.

    ``kappa = sum_pi (|pi| - 1)! (-1)^(|pi| - 1) prod_{b in pi} E[X_b]``
    """
    A = list(A)
    samples = np.asarray(samples, dtype=float)
    if len(A) > CUMULANT_MAX:
        raise SizeGuardError(f"|A| = {len(A)} exceeds {CUMULANT_MAX}")
    if samples.shape[0] < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples.shape[0]}")
    cols = samples[:, A]
    moments = {}

    def moment(block):
        key = tuple(block)
        if key not in moments:
            moments[key] = float(np.mean(np.prod(cols[:, list(block)], axis=1)))
        return moments[key]

    terms = []
    for part in set_partitions(range(len(A))):
        k = len(part)
        coef = (-1) ** (k - 1) * math.factorial(k - 1)
        terms.append(coef * math.prod(moment(b) for b in part))
    return math.fsum(terms)


def cumulant_sample_stderr(samples: np.ndarray, A: Sequence[int], n_batches: int = 20) -> float:
    """Batch-means standard error of :func:`empirical_cumulant`."""
    samples = np.asarray(samples, dtype=float)
    chunks = np.array_split(samples, n_batches)
    vals = np.array([empirical_cumulant(c, A) for c in chunks if len(c) >= MIN_SAMPLES] or [np.nan])
    return float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else float("nan")
