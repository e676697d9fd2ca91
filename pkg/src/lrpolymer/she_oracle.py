"""Continuum-side reference values for the polymer limit.

Everything here is computed from the limiting objects only (the stable
density, the singular time weight and Brownian or rescaled-walk paths) and
never from the discrete polymer, so agreement between the two sides is a
genuine check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np
from scipy import integrate, special

from . import kernel_space as ks
from . import stable_walk as sw
from .polymer import GateError, check_gate, log_mean_exp
from .rng import substream


@dataclass(frozen=True)
class ContinuumParams:
    H: float
    rho: float
    c_rho: float
    beta: float
    x0: float = 0.0
    t: float = 1.0

    @property
    def theta(self) -> float:
        return self.H - 1.0 / (2.0 * self.rho)

    @property
    def density(self) -> sw.StableDensity:
        return sw.StableDensity(self.rho, self.c_rho)

    def g(self, t, x):
        return sw.stable_density(self.density, t, x)

    def g0(self, t=1.0):
        """``g(t, 0)``."""
        return self.density.at_zero(t)


def continuum_params(H: float, rho: float, beta: float, x0: float = 0.0, law: sw.IncrementLaw | None = None,
                     zero_mass: float = 0.5) -> ContinuumParams:
    """Parameters with ``c_rho`` calibrated from the walk's step law."""
    if law is None:
        law = sw.build_increment_law(rho, zero_mass)
    return ContinuumParams(H, rho, sw.calibrate_c_rho(law), beta, x0)


# ---------------------------------------------------------------------------
# kernels


def g_m_eval(times, xs, cp: ContinuumParams):
    """``prod_i g(t_{i+1} - t_i, x_{i+1} - x_i)`` on the ordered simplex, else 0.

    ``times`` and ``xs`` have shape ``(m,)`` or ``(P, m)``; the last point is
    ``(1, x0)``.
    """
    T = np.atleast_2d(np.asarray(times, dtype=float))
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    P, m = T.shape
    Tn = np.column_stack((T, np.full(P, cp.t)))
    Xn = np.column_stack((X, np.full(P, cp.x0)))
    dt = np.diff(Tn, axis=1)
    ok = np.all(dt > 0, axis=1) & np.all((T >= 0) & (T <= cp.t), axis=1)
    out = np.zeros(P)
    if np.any(ok):
        vals = cp.g(dt[ok], np.diff(Xn, axis=1)[ok])
        out[ok] = np.prod(np.atleast_2d(vals), axis=1)
    return out if np.ndim(times) > 1 else float(out[0])


def chapman_kolmogorov_quad(a: float, b: float, cp: ContinuumParams) -> float:
    """``int g(a, x) g(b, x) dx`` by adaptive quadrature (reference for the reduction)."""
    f = lambda x: cp.g(a, x) * cp.g(b, x)
    s = max(a, b) ** (1.0 / cp.rho)
    pieces = [(-np.inf, -s), (-s, 0.0), (0.0, s), (s, np.inf)]
    return math.fsum(integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-11, limit=400)[0] for lo, hi in pieces)


def triple_overlap(a, b, e, cp: ContinuumParams, n_nodes: int = 161, span: float = 9.0):
    """``int g(a, z) g(b, z) g(e, z) dz`` (vectorized over equal-shape arrays)."""
    a, b, e = (np.asarray(v, dtype=float) for v in (a, b, e))
    if cp.rho == 2.0:
        v1, v2, v3 = 2 * cp.c_rho * a, 2 * cp.c_rho * b, 2 * cp.c_rho * e
        S = 1.0 / v1 + 1.0 / v2 + 1.0 / v3
        return 1.0 / (2.0 * math.pi * np.sqrt(v1 * v2 * v3 * S))
    # z = sigma sinh(tau), trapezoid in tau
    sigma = (np.minimum(np.minimum(a, b), e) * cp.c_rho) ** (1.0 / cp.rho)
    tau = np.linspace(-span, span, n_nodes)
    h = tau[1] - tau[0]
    z = sigma[..., None] * np.sinh(tau)
    jac = sigma[..., None] * np.cosh(tau)
    vals = cp.g(a[..., None], z) * cp.g(b[..., None], z) * cp.g(e[..., None], z)
    return h * np.sum(vals * jac, axis=-1)


# ---------------------------------------------------------------------------
# chaos norms


@dataclass
class NormResult:
    value: float
    stderr: float
    converged: bool
    method: str
    nodes: int


def skorohod_norm(m: int, cp: ContinuumParams, tol: float = 1e-10, rng: np.random.Generator | None = None,
                  **mc_kw) -> NormResult:
    """Squared norm of the order-``m`` chaos kernel of the solution at ``(1, x0)``."""
    if m == 1:
        r = ks.singular_time_integral(lambda s, t: (2.0 - s - t) ** (-1.0 / cp.rho), cp.H,
                                      corner_power=-1.0 / cp.rho, tol=tol)
        return NormResult(cp.g0() * r.value, cp.g0() * r.error, r.converged, "quadrature", r.nodes)
    if m == 2:
        if rng is None:
            rng = np.random.default_rng(0x5EED)
        return _norm2_mc(cp, rng, **mc_kw)
    raise ValueError("skorohod_norm implemented for m = 1, 2")


def norm2_integrand(s1, s2, t1, t2, cp: ContinuumParams):
    """``<g_2(s, .), g_2(t, .)>`` in space, with the 1/2 symmetrization on each side."""
    os_ = s1 < s2
    ot = t1 < t2
    a_s = np.abs(s2 - s1)
    a_t = np.abs(t2 - t1)
    e_s = cp.t - np.maximum(s1, s2)
    e_t = cp.t - np.maximum(t1, t2)
    same = os_ == ot
    out = np.empty(np.shape(s1))
    if np.any(same):
        out[same] = cp.g0(a_s[same] + a_t[same]) * cp.g0(e_s[same] + e_t[same])
    cross = ~same
    if np.any(cross):
        out[cross] = triple_overlap(a_s[cross], a_t[cross], e_s[cross] + e_t[cross], cp)
    return 0.25 * out


def _norm2_mc(cp: ContinuumParams, rng: np.random.Generator, strata: int = 12, replicates: int = 16) -> NormResult:
    """Stratified estimate over the four time variables.

    Each axis pair ``(s_i, t_i)`` is drawn from the density proportional to
    ``|s_i - t_i|^(2H-2)``; the two continuous uniforms per pair are
    stratified on a ``strata^4`` grid and both orientation flips are
    enumerated.
    """
    k = strata
    grid = np.stack(np.meshgrid(*[np.arange(k)] * 4, indexing="ij"), axis=-1).reshape(-1, 4)
    ests = []
    nodes = 0
    for _ in range(replicates):
        u = (grid + rng.random(grid.shape)) / k
        vals = []
        for f1 in (0.25, 0.75):
            for f2 in (0.25, 0.75):
                s1, t1, w1 = ks.sample_time_pairs(cp.H, len(u), rng, np.column_stack((u[:, 0], u[:, 1], np.full(len(u), f1))))
                s2, t2, w2 = ks.sample_time_pairs(cp.H, len(u), rng, np.column_stack((u[:, 2], u[:, 3], np.full(len(u), f2))))
                vals.append(w1 * w2 * norm2_integrand(s1, s2, t1, t2, cp))
                nodes += len(u)
        ests.append(float(np.mean(np.concatenate(vals))))
    ests = np.array(ests)
    return NormResult(float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(replicates)), True, "stratified-mc", nodes)


def skorohod_norm1_mc(cp: ContinuumParams, rng: np.random.Generator, strata: int = 256, replicates: int = 16) -> NormResult:
    """Independent stratified Monte Carlo value of the first-order norm."""
    k = strata
    grid = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), axis=-1).reshape(-1, 2)
    ests = []
    for _ in range(replicates):
        u = (grid + rng.random(grid.shape)) / k
        parts = []
        for fl in (0.25, 0.75):
            s, t, w = ks.sample_time_pairs(cp.H, len(u), rng, np.column_stack((u, np.full(len(u), fl))))
            parts.append(w * cp.g0(2.0 - s - t))
        ests.append(float(np.mean(np.concatenate(parts))))
    ests = np.array(ests)
    return NormResult(float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(replicates)), True, "stratified-mc",
                      2 * len(grid) * replicates)


# ---------------------------------------------------------------------------
# chaos series bound


def log_chaos_bound_base(m: int, cp: ContinuumParams) -> float:
    """``log[(m!)^(H-1) (Gamma(theta/H)^m / Gamma(m theta/H + 1))^H]``."""
    th, H = cp.theta, cp.H
    if th <= 0:
        raise GateError("the chaos bound needs theta > 0")
    return (H - 1.0) * special.gammaln(m + 1.0) + H * (m * special.gammaln(th / H) - special.gammaln(m * th / H + 1.0))


def calibrate_chaos_bound(cp: ContinuumParams, norms: dict[int, float], margin: float = 1.5) -> float:
    """Smallest ``C`` with ``bound(m) >= margin * sqrt(norm_m)`` for the given ``m``."""
    logs = [(math.log(margin * math.sqrt(v)) - log_chaos_bound_base(m, cp)) / m for m, v in norms.items() if v > 0]
    return math.exp(max(logs)) if logs else 1.0


def chaos_norm_bound(m: int, cp: ContinuumParams, C: float) -> float:
    """``C^m (m!)^(H-1) (Gamma(theta/H)^m / Gamma(m theta/H + 1))^H``."""
    return math.exp(m * math.log(C) + log_chaos_bound_base(m, cp))


def hu_meyer_coeff(m: int, k: int) -> int:
    """``m! / (k! (m-2k)! 2^k)`` as an exact integer."""
    if m < 0 or k < 0 or 2 * k > m:
        raise ValueError(f"need 0 <= k <= m/2, got m={m}, k={k}")
    q = Fraction(math.factorial(m), math.factorial(k) * math.factorial(m - 2 * k) * 2**k)
    assert q.denominator == 1
    return int(q)


@dataclass
class MomentSeries:
    values: list[float]
    stderr: float
    remainder_bound: float
    C: float
    norms: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return math.fsum(self.values)


def remainder_terms(cp: ContinuumParams, C: float, m_from: int, m_to: int = 60) -> np.ndarray:
    """``m! beta^(2m) bound(m)^2`` for ``m_from <= m <= m_to`` (log-space evaluation)."""
    out = []
    for m in range(m_from, m_to + 1):
        if cp.beta == 0:
            out.append(0.0)
            continue
        lg = special.gammaln(m + 1.0) + 2 * m * math.log(cp.beta) + 2.0 * (m * math.log(C) + log_chaos_bound_base(m, cp))
        out.append(math.exp(lg) if lg < 700 else math.inf)
    return np.array(out)


def skorohod_second_moment(cp: ContinuumParams, m_max: int = 2, norms: dict | None = None,
                           rng: np.random.Generator | None = None) -> MomentSeries:
    """``1 + sum_{m<=m_max} m! beta^(2m) ||g_m||^2`` with a bound on the rest."""
    if m_max > 2:
        raise ValueError("m_max <= 2")
    if norms is None:
        norms = {}
    res = {}
    for m in range(1, 3):
        if m not in norms:
            norms[m] = skorohod_norm(m, cp, rng=rng)
        r = norms[m]
        res[m] = r if isinstance(r, NormResult) else NormResult(float(r), 0.0, True, "given", 0)
    values = [1.0]
    var = 0.0
    for m in range(1, m_max + 1):
        coef = math.factorial(m) * cp.beta ** (2 * m)
        values.append(coef * res[m].value)
        var += (coef * res[m].stderr) ** 2
    C = calibrate_chaos_bound(cp, {m: res[m].value for m in (1, 2)})
    rem = float(math.fsum(remainder_terms(cp, C, m_max + 1)))
    return MomentSeries(values, math.sqrt(var), rem, C, {m: res[m].value for m in res})


# ---------------------------------------------------------------------------
# Feynman-Kac first moment


@numba.njit(cache=True)
def _silt_functional(X, lagw, eps):
    # visit only pairs whose positions are within the kernel cutoff, via a sort
    n = X.shape[0]
    order = np.argsort(X)
    xs = X[order]
    norm = 1.0 / math.sqrt(2.0 * math.pi * eps)
    cut = math.sqrt(80.0 * eps)
    acc = 0.0
    for a in range(n):
        xa = xs[a]
        ia = order[a]
        b = a + 1
        while b < n and xs[b] - xa < cut:
            d = xs[b] - xa
            acc += lagw[abs(order[b] - ia)] * math.exp(-0.5 * d * d / eps)
            b += 1
    return 2.0 * norm * acc / (n * n)


@numba.njit(cache=True)
def _silt_batch(paths, lagw, eps):
    M = paths.shape[0]
    out = np.empty(M)
    for m in range(M):
        out[m] = _silt_functional(paths[m], lagw, eps)
    return out


def silt_paths(cp: ContinuumParams, n_steps: int, M: int, rng: np.random.Generator, gaussian: bool = True,
               law: sw.IncrementLaw | None = None, oversample: int = 16) -> np.ndarray:
    """Stable paths sampled at ``r_i = (i - 1/2) / n`` (shape ``(M, n)``)."""
    n = n_steps
    if gaussian and cp.rho == 2.0:
        var = 2.0 * cp.c_rho / n
        inc = rng.standard_normal((M, n)) * math.sqrt(var)
        inc[:, 0] *= math.sqrt(0.5)
        return np.cumsum(inc, axis=1)
    if law is None:
        law = sw.build_increment_law(cp.rho)
    os_ = max(2, 2 * (oversample // 2))
    L = n * os_
    steps = sw.sample_increments(law, (M, L), rng)
    S = np.cumsum(steps, axis=1)
    idx = (np.arange(n) * os_ + os_ // 2) - 1
    return S[:, idx] / L ** (1.0 / cp.rho)


def silt_functional(cp: ContinuumParams, X: np.ndarray, epsilon: float) -> np.ndarray:
    """``(1/n^2) sum_{i != j} |r_i - r_j|^(2H-2) p_eps(X_i - X_j)`` per row of ``X``."""
    n = X.shape[-1]
    lagw = np.zeros(n)
    lagw[1:] = (np.arange(1, n) / n) ** (2.0 * cp.H - 2.0)
    X2 = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    return _silt_batch(X2, lagw, float(epsilon))


def silt_mean_exact(cp: ContinuumParams, n_steps: int, epsilon: float) -> float:
    """``E[L_eps]`` on the grid for Brownian paths (Gaussian closed form)."""
    if cp.rho != 2.0:
        raise ValueError("closed form only for rho = 2")
    n = n_steps
    d = np.arange(1, n)
    var = 2.0 * cp.c_rho * d / n + epsilon
    return float(2.0 / n**2 * np.sum((n - d) * (d / n) ** (2 * cp.H - 2) / np.sqrt(2 * math.pi * var)))


@dataclass
class SiltEstimate:
    value: float
    stderr: float
    halved_value: float
    halved_stderr: float
    stable: bool
    n_steps: int
    epsilon: float
    paths: int


def _silt_once(cp, n_steps, epsilon, M, rng, gaussian, law, block=256):
    logs = []
    for start in range(0, M, block):
        size = min(block, M - start)
        X = silt_paths(cp, n_steps, size, rng, gaussian, law)
        logs.append(0.5 * cp.beta**2 * silt_functional(cp, X, epsilon))
    return log_mean_exp(np.concatenate(logs))


def silt_exponential_moment(cp: ContinuumParams, n_steps: int, epsilon: float, M: int, rng: np.random.Generator,
                            gaussian: bool = True, law: sw.IncrementLaw | None = None,
                            halving_check: bool = True) -> SiltEstimate:
    """Monte Carlo ``E_X[exp(beta^2 / 2 * L_eps)]`` with an epsilon-halving diagnostic."""
    check_gate(cp.H, cp.rho, "stratonovich")
    if n_steps < 64:
        raise ValueError("n_steps must be at least 64")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if M < 2:
        raise ValueError("need at least two paths")
    if cp.beta == 0:
        return SiltEstimate(1.0, 0.0, 1.0, 0.0, True, n_steps, epsilon, M)
    # two independent child streams, so the halved run does not share paths
    root = int(rng.integers(0, 2**62))
    rng_a, rng_b = substream(root, 0), substream(root, 1)
    v, se = _silt_once(cp, n_steps, epsilon, M, rng_a, gaussian, law)
    if halving_check:
        vh, seh = _silt_once(cp, n_steps, 0.5 * epsilon, M, rng_b, gaussian, law)
        stable = abs(v - vh) <= 3.0 * math.hypot(se, seh)
    else:
        vh, seh, stable = math.nan, math.nan, True
    return SiltEstimate(v, se, vh, seh, stable, n_steps, epsilon, M)
