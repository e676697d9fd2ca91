"""Discrete directed polymer: pinned walks, Hamiltonians and partition functions.

The walk runs backward in time from ``S_{N+1} = K``.  For a path ``S`` and
environment ``omega`` the Hamiltonian is ``sum_n omega(n, S_n)``; the plain
partition function averages ``exp(beta_hat * H)`` over paths, and the
Wick-corrected one subtracts half the conditional variance,
``beta_hat^2 / 2 * sum_{i,j} gamma(i - j) 1{S_i = S_j}``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import linalg, special

from . import stable_walk as sw
from .disorder import DisorderField, TemporalCovariance
from .kernel_space import BlockGrid
from .wick_algebra import wick_power

ENUM_MAX_N = 8


class GateError(ValueError):
    """Parameters outside the admissible region for the requested mode."""


@dataclass(frozen=True)
class PolymerParams:
    N: int
    beta: float
    H: float
    rho: float
    x0: float = 0.0

    @property
    def theta(self) -> float:
        return self.H - 1.0 / (2.0 * self.rho)

    @property
    def beta_hat(self) -> float:
        return self.beta * self.N ** (-self.theta)

    @property
    def K(self) -> int:
        return int(round(self.N ** (1.0 / self.rho) * self.x0))

    def check_gate(self, mode: str) -> None:
        check_gate(self.H, self.rho, mode)

    def with_N(self, N: int) -> "PolymerParams":
        return PolymerParams(N, self.beta, self.H, self.rho, self.x0)


def check_gate(H: float, rho: float, mode: str) -> None:
    """Reject parameters outside the hypotheses for ``mode``."""
    theta = H - 1.0 / (2.0 * rho)
    if not (0.5 < H <= 1.0):
        raise GateError(f"H = {H} must lie in (1/2, 1]")
    if not (1.0 < rho <= 2.0):
        raise GateError(f"rho = {rho} must lie in (1, 2]")
    if mode == "stratonovich":
        if not theta > 0.5:
            raise GateError(
                f"stratonovich mode needs theta = H - 1/(2 rho) > 1/2 strictly; got theta = {theta!r} "
                f"(H = {H}, rho = {rho})")
    elif mode == "skorohod":
        if not theta > 0.0:
            raise GateError(f"skorohod mode needs theta = H - 1/(2 rho) > 0; got theta = {theta!r}")
    else:
        raise GateError(f"unknown mode {mode!r}")


@dataclass
class PartitionEstimate:
    value: float
    stderr: float
    paths: int
    mode: str


@dataclass
class MCEstimate:
    value: float
    stderr: float
    samples: int


# ---------------------------------------------------------------------------
# paths


def pinned_paths(params: PolymerParams, law: sw.IncrementLaw, M: int, rng: np.random.Generator) -> np.ndarray:
    """``M`` backward paths; column ``n - 1`` holds ``S_n`` and ``S_{N+1} = K``.

    ``S_{N+1-j} = K + Y_1 + ... + Y_j``, which for a symmetric law has the
    law of the walk read backward from the pinned endpoint.
    """
    if not law.symmetric:
        raise ValueError("pinned paths need a symmetric step law")
    N = params.N
    steps = sw.sample_increments(law, (M, N), rng)
    fwd = params.K + np.cumsum(steps, axis=1)
    return np.ascontiguousarray(fwd[:, ::-1])


def pinned_path(params: PolymerParams, law: sw.IncrementLaw, rng: np.random.Generator) -> np.ndarray:
    return pinned_paths(params, law, 1, rng)[0]


# ---------------------------------------------------------------------------
# local times


@numba.njit(cache=True)
def _self_local_time_one(path, gam):
    n = path.shape[0]
    order = np.argsort(path, kind="mergesort")
    total = 0.0
    i = 0
    while i < n:
        j = i
        site = path[order[i]]
        while j < n and path[order[j]] == site:
            j += 1
        cnt = j - i
        acc = cnt * gam[0]
        for a in range(i, j):
            ta = order[a]
            for b in range(a + 1, j):
                tb = order[b]
                d = tb - ta if tb > ta else ta - tb
                acc += 2.0 * gam[d]
        total += acc
        i = j
    return total


@numba.njit(cache=True)
def _self_local_time_batch(paths, gam):
    M = paths.shape[0]
    out = np.empty(M)
    for m in range(M):
        out[m] = _self_local_time_one(paths[m], gam)
    return out


@numba.njit(cache=True)
def _cross_local_time_one(p, q, gam):
    n = p.shape[0]
    op = np.argsort(p, kind="mergesort")
    oq = np.argsort(q, kind="mergesort")
    i = 0
    j = 0
    total = 0.0
    while i < n and j < n:
        sp = p[op[i]]
        sq = q[oq[j]]
        if sp < sq:
            i += 1
        elif sq < sp:
            j += 1
        else:
            i2 = i
            while i2 < n and p[op[i2]] == sp:
                i2 += 1
            j2 = j
            while j2 < n and q[oq[j2]] == sp:
                j2 += 1
            for a in range(i, i2):
                ta = op[a]
                for b in range(j, j2):
                    tb = oq[b]
                    d = tb - ta if tb > ta else ta - tb
                    total += gam[d]
            i = i2
            j = j2
    return total


@numba.njit(cache=True)
def _cross_local_time_batch(P, Q, gam):
    M = P.shape[0]
    out = np.empty(M)
    for m in range(M):
        out[m] = _cross_local_time_one(P[m], Q[m], gam)
    return out


def _gamma_table(gamma, N: int) -> np.ndarray:
    if isinstance(gamma, np.ndarray):
        if len(gamma) < N:
            raise ValueError("gamma table shorter than the path")
        return np.ascontiguousarray(gamma[:N], dtype=float)
    return np.ascontiguousarray(gamma.table(N), dtype=float)


def intersection_local_time(gamma, path) -> float | np.ndarray:
    """``sum_{i,j} gamma(i - j) 1{S_i = S_j}`` (diagonal included).

    ``path`` may be one path or a 2-D array of paths (one per row).
    ``gamma`` is a :class:`TemporalCovariance` or a table ``gamma(0..N-1)``.
    """
    path = np.asarray(path, dtype=np.int64)
    gam = _gamma_table(gamma, path.shape[-1])
    if path.ndim == 1:
        return float(_self_local_time_one(np.ascontiguousarray(path), gam))
    return _self_local_time_batch(np.ascontiguousarray(path), gam)


def intersection_local_time_brute(gamma, path) -> float:
    """O(N^2) reference for :func:`intersection_local_time`."""
    path = np.asarray(path)
    N = len(path)
    gam = _gamma_table(gamma, N)
    idx = np.arange(N)
    lag = np.abs(idx[:, None] - idx[None, :])
    return float(np.sum(gam[lag] * (path[:, None] == path[None, :])))


def mutual_local_time(gamma, p, q):
    """``sum_{i,j} gamma(i - j) 1{S_i = S'_j}`` for paired rows of ``p`` and ``q``."""
    p = np.ascontiguousarray(np.asarray(p, dtype=np.int64))
    q = np.ascontiguousarray(np.asarray(q, dtype=np.int64))
    gam = _gamma_table(gamma, p.shape[-1])
    if p.ndim == 1:
        return float(_cross_local_time_one(p, q, gam))
    return _cross_local_time_batch(p, q, gam)


def mutual_local_time_brute(gamma, p, q) -> float:
    p, q = np.asarray(p), np.asarray(q)
    N = len(p)
    gam = _gamma_table(gamma, N)
    idx = np.arange(N)
    lag = np.abs(idx[:, None] - idx[None, :])
    return float(np.sum(gam[lag] * (p[:, None] == q[None, :])))


# ---------------------------------------------------------------------------
# partition functions


def log_mean_exp(log_s: np.ndarray):
    """``(mean, stderr)`` of ``exp(log_s)`` computed with a common shift."""
    M = len(log_s)
    top = float(np.max(log_s))
    e = np.exp(log_s - top)
    e_bar = math.fsum(e) / M
    mean = math.exp(top + math.log(e_bar))
    sd = float(np.std(e, ddof=1)) if M > 1 else 0.0
    return mean, mean * (sd / e_bar) / math.sqrt(M)


def path_exponents(params: PolymerParams, field: DisorderField, paths: np.ndarray, gam_table=None):
    """``(Y, sigma2)``: ``beta_hat * sum omega(n, S_n)`` and ``beta_hat^2 * L(S)`` per path."""
    bh = params.beta_hat
    Y = bh * field.along_paths(paths).sum(axis=1)
    if gam_table is None:
        gam_table = field.cov.table(params.N)
    sigma2 = bh * bh * intersection_local_time(gam_table, paths)
    return Y, sigma2


def estimate_partition(params: PolymerParams, field: DisorderField, law: sw.IncrementLaw, M: int, mode: str,
                       rng: np.random.Generator, paths: np.ndarray | None = None) -> PartitionEstimate:
    """Monte Carlo average of the path weights for one environment."""
    if M < 2:
        raise ValueError("need at least two paths")
    if mode not in ("plain", "wick_corrected"):
        raise ValueError(f"unknown mode {mode!r}")
    if paths is None:
        paths = pinned_paths(params, law, M, rng)
    Y, sigma2 = path_exponents(params, field, paths)
    log_s = Y if mode == "plain" else Y - 0.5 * sigma2
    value, se = log_mean_exp(log_s)
    return PartitionEstimate(value, se, len(paths), mode)


def enumerate_exact(params: PolymerParams, field: DisorderField, law: sw.IncrementLaw, mode: str) -> float:
    """Exact path average by listing every backward path (finite laws, ``N <= 8``)."""
    if not law.finite:
        raise ValueError("exact enumeration needs a finite step law")
    N = params.N
    if N > ENUM_MAX_N:
        raise ValueError(f"N = {N} too large for enumeration (max {ENUM_MAX_N})")
    vals, probs = law.support_values()
    combos = np.array(list(itertools.product(range(len(vals)), repeat=N)), dtype=np.int64).reshape(-1, N)
    steps = vals[combos]
    logp = np.log(probs)[combos].sum(axis=1)
    paths = (params.K + np.cumsum(steps, axis=1))[:, ::-1]
    bh = params.beta_hat
    site_vals = field.along_paths(paths)
    expo = bh * site_vals.sum(axis=1)
    if mode == "wick_corrected":
        gam = field.cov.table(N)
        lag = np.abs(np.arange(N)[:, None] - np.arange(N)[None, :])
        eq = paths[:, :, None] == paths[:, None, :]
        L = np.einsum("pij,ij->p", eq, gam[lag])
        expo = expo - 0.5 * bh * bh * L
    elif mode != "plain":
        raise ValueError(f"unknown mode {mode!r}")
    return float(np.exp(special.logsumexp(logp + expo)))


def enumerate_exact_recursive(params: PolymerParams, field: DisorderField, law: sw.IncrementLaw, mode: str) -> float:
    """Depth-first enumeration with incremental exponents (second implementation)."""
    if not law.finite:
        raise ValueError("exact enumeration needs a finite step law")
    N = params.N
    if N > ENUM_MAX_N:
        raise ValueError(f"N = {N} too large for enumeration (max {ENUM_MAX_N})")
    vals, probs = law.support_values()
    bh = params.beta_hat
    gam = [float(g) for g in field.cov.table(N)]
    wick = mode == "wick_corrected"
    leaves = []
    visited: list[tuple[int, int]] = []  # (time, site) already placed

    def rec(n: int, site_prev: int, logp: float, expo: float):
        if n == 0:
            leaves.append(math.exp(logp + expo))
            return
        for y, p in zip(vals, probs):
            x = int(site_prev + y)
            e = expo + bh * field.omega_at(n, x)
            if wick:
                corr = gam[0] + 2.0 * sum(gam[m - n] for m, xm in visited if xm == x)
                e -= 0.5 * bh * bh * corr
            visited.append((n, x))
            rec(n - 1, x, logp + math.log(p), e)
            visited.pop()

    rec(N, params.K, 0.0, 0.0)
    return math.fsum(leaves)


# ---------------------------------------------------------------------------
# chaos terms


def chaos_values(Y: np.ndarray, sigma2: np.ndarray, m: int, wick: bool) -> np.ndarray:
    """Per-path ``Y^m`` or its Wick power ``sigma^m H_m(Y / sigma)``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if wick:
        if np.any(sigma2 < 0):
            raise ValueError("conditional variance must be non-negative")
        return wick_power(Y, sigma2, m)
    return np.asarray(Y, dtype=float) ** m


def chaos_term(params: PolymerParams, field: DisorderField, law: sw.IncrementLaw, m: int, M: int, wick: bool,
               rng: np.random.Generator, paths: np.ndarray | None = None) -> MCEstimate:
    """Path average of the ``m``-th power (or Wick power) of ``beta_hat * H(S)``."""
    if M < 2:
        raise ValueError("need at least two paths")
    if paths is None:
        paths = pinned_paths(params, law, M, rng)
    Y, sigma2 = path_exponents(params, field, paths)
    v = chaos_values(Y, sigma2, m, wick)
    return MCEstimate(float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(len(v))), len(v))


# ---------------------------------------------------------------------------
# U-statistics


def u_statistic(field: DisorderField, grid: BlockGrid, m: int, params: PolymerParams) -> float:
    """``N^(-m(theta + 1/rho)) sum_cells :omega...omega: A_N(f)`` for ``m`` in {1, 2}.

    Space cell ``k`` of the grid is lattice site ``k``; time cell ``n`` is
    time index ``n``.
    """
    if m not in (1, 2):
        raise ValueError("u_statistic supports m = 1 or 2")
    if grid.m != m:
        raise ValueError("grid order does not match m")
    N = params.N
    if grid.N != N:
        raise ValueError("grid N differs from params N")
    norm = N ** (-m * (params.theta + 1.0 / params.rho))
    sites = grid.sites()
    W = np.stack([field.site(k) for k in sites], axis=1)  # (N, K)
    if m == 1:
        return norm * math.fsum((W * grid.values).ravel())
    A = grid.values.reshape(N * len(sites), N * len(sites))
    w = W.ravel()
    quad = float(w @ A @ w)
    # subtract sum_{c1,c2} Gamma_{c1 c2} A_{c1 c2} with Gamma = gamma(n1-n2) delta_{k1 k2}
    gam = field.cov.table(N)
    G = linalg.toeplitz(gam)
    A4 = grid.values
    corr = float(np.einsum("ab,akbk->", G, A4))
    return norm * (quad - corr)


def u_statistic_variance(grid: BlockGrid, params: PolymerParams, cov: TemporalCovariance) -> float:
    """Exact variance of the ``m = 1`` U-statistic: ``N^(-2(theta+1/rho)) sum_k a_k' Gamma a_k``."""
    if grid.m != 1:
        raise ValueError("exact variance implemented for m = 1")
    N = params.N
    gam = cov.table(N)
    A = grid.values
    GA = linalg.matmul_toeplitz((gam, gam), A)
    return N ** (-2.0 * (params.theta + 1.0 / params.rho)) * math.fsum((A * GA).ravel())


# ---------------------------------------------------------------------------
# exact variance of the first chaos term


def exact_variance_S1(params: PolymerParams, law: sw.IncrementLaw, gamma=None, window: int | None = None):
    """``Var(S_1) = beta_hat^2 sum_{a,b=1}^N gamma(a - b) P_{a+b}(0)`` and an error bound.

    ``P_{a+b}(0) = sum_k P_a(K - k) P_b(K - k)`` by symmetry, so only return
    probabilities are needed; window truncation errors are propagated into
    the returned bound.
    """
    N = params.N
    if gamma is None:
        gamma = TemporalCovariance(params.H)
    gam = _gamma_table(gamma, N)
    r, err = sw.return_probabilities(law, N, window)
    a = np.arange(1, N + 1)
    rows, errs = [], []
    for i in range(N):
        g = gam[np.abs(a - a[i])]
        rows.append(float(np.dot(g, r[a[i] + a])))
        errs.append(float(np.dot(g, err[a[i] + a])))
    bh2 = params.beta_hat**2
    return bh2 * math.fsum(rows), bh2 * math.fsum(errs)


# ---------------------------------------------------------------------------
# environment-averaged moments


def _path_blocks(M: int, block: int):
    start = 0
    while start < M:
        yield start, min(block, M - start)
        start += block


def env_log_summands(params: PolymerParams, law: sw.IncrementLaw, gamma, M: int, which: str,
                     rng: np.random.Generator, block: int = 512) -> np.ndarray:
    """Per-sample exponents whose exponential averages to the requested moment."""
    N = params.N
    gam = _gamma_table(gamma, N)
    bh2 = params.beta_hat**2
    out = np.empty(M)
    for start, size in _path_blocks(M, block):
        if which == "mean_Z":
            p = pinned_paths(params, law, size, rng)
            out[start:start + size] = 0.5 * bh2 * _self_local_time_batch(p, gam)
        elif which == "second_moment_Z_tilde":
            p = pinned_paths(params, law, size, rng)
            q = pinned_paths(params, law, size, rng)
            out[start:start + size] = bh2 * _cross_local_time_batch(p, q, gam)
        else:
            raise ValueError(f"unknown moment {which!r}")
    return out


def env_moment_oracle(params: PolymerParams, law: sw.IncrementLaw, gamma, M: int, which: str,
                      rng: np.random.Generator) -> MCEstimate:
    """``E_omega[Z]`` or ``E_omega[Z_tilde^2]`` via their path representations.

    ``mean_Z`` averages ``exp(beta_hat^2 / 2 * L(S))``; the second moment of
    ``Z_tilde`` averages ``exp(beta_hat^2 * sum gamma(i-j) 1{S_i = S'_j})``
    over independent pairs.
    """
    if M < 2:
        raise ValueError("need at least two samples")
    log_s = env_log_summands(params, law, gamma, M, which, rng)
    v, se = log_mean_exp(log_s)
    return MCEstimate(v, se, M)


def second_moment_brute(params: PolymerParams, law: sw.IncrementLaw, gamma) -> float:
    """Exact ``E_omega[Z_tilde^2]`` by enumerating all path pairs (small ``N``)."""
    if not law.finite or params.N > 5:
        raise ValueError("brute force needs a finite law and N <= 5")
    N = params.N
    vals, probs = law.support_values()
    combos = np.array(list(itertools.product(range(len(vals)), repeat=N)), dtype=np.int64).reshape(-1, N)
    paths = (params.K + np.cumsum(vals[combos], axis=1))[:, ::-1]
    logp = np.log(probs)[combos].sum(axis=1)
    gam = _gamma_table(gamma, N)
    lag = np.abs(np.arange(N)[:, None] - np.arange(N)[None, :])
    G = gam[lag]
    bh2 = params.beta_hat**2
    terms = []
    for i in range(len(paths)):
        eq = paths[i][None, :, None] == paths[:, None, :]
        X = np.einsum("pij,ij->p", eq, G)
        terms.append(special.logsumexp(logp[i] + logp + bh2 * X))
    return float(np.exp(special.logsumexp(terms)))
