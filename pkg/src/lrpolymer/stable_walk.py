"""Lattice increment laws in the domain of attraction of a stable law.

Two families are provided.  For ``rho == 2`` the step law is the five-atom
law ``{0: 3/8, +-1: 1/4, +-2: 1/16}`` (unit variance).  For ``1 < rho < 2``
the law has an atom at zero and symmetric Pareto weights
``P(Y = +-k) = (1 - p0) / 2 * k**(-1 - rho) / zeta(1 + rho)``, tabulated up to
a cutoff and handled analytically beyond it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, signal, special
from scipy.interpolate import CubicSpline

TAIL_CUTOFF = 10**6
MAX_TAIL_MASS = 0.01


class CalibrationError(RuntimeError):
    """Raised when the c_rho extrapolation ladder does not settle."""


class KernelWindowError(ValueError):
    """Raised when a transition kernel window loses too much mass."""


@dataclass(frozen=True)
class IncrementLaw:
    """Symmetric 1-lattice step law.

    ``table[k]`` is ``P(Y = k) = P(Y = -k)`` for ``0 <= k <= cutoff``.  Beyond the
    cutoff the weights are ``tail_coef * k**(-1 - rho)`` and their total
    (two-sided) mass is ``tail_mass``.  ``bound_const`` is a constant with
    ``weight(k) <= bound_const * |k|**(-1 - rho)`` for every ``k != 0``.
    """

    rho: float
    atom_zero: float
    table: np.ndarray
    tail_coef: float
    tail_mass: float
    bound_const: float
    symmetric: bool = True
    _abs_cdf: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def cutoff(self) -> int:
        return len(self.table) - 1

    @property
    def finite(self) -> bool:
        return self.tail_coef == 0.0

    def weight(self, k):
        """Probability of a step of size ``k`` (vectorized)."""
        a = np.abs(np.asarray(k, dtype=np.int64))
        inside = a <= self.cutoff
        out = np.zeros(a.shape, dtype=float)
        out[inside] = self.table[a[inside]]
        if not self.finite:
            far = a[~inside].astype(float)
            out[~inside] = self.tail_coef * far ** (-1.0 - self.rho)
        return out if out.ndim else float(out)

    def support_values(self):
        """Atoms and probabilities of a finite law, in increasing order."""
        if not self.finite:
            raise ValueError("law has infinite support")
        c = self.cutoff
        vals = np.arange(-c, c + 1)
        probs = self.table[np.abs(vals)]
        keep = probs > 0
        return vals[keep], probs[keep]

    def total_mass(self) -> float:
        return math.fsum([self.table[0], 2.0 * math.fsum(self.table[1:]), self.tail_mass])


def build_increment_law(rho: float, zero_mass: float = 0.5, tail_cutoff: int = TAIL_CUTOFF) -> IncrementLaw:
    """Construct the step law for index ``rho``.

    For ``rho == 2`` ``zero_mass`` is ignored and the five-atom unit-variance
    law is returned.
    """
    rho = float(rho)
    if not (1.0 < rho <= 2.0):
        raise ValueError(f"rho must lie in (1, 2], got {rho}")
    if rho == 2.0:
        table = np.array([3 / 8, 1 / 4, 1 / 16])
        law = IncrementLaw(rho, 3 / 8, table, 0.0, 0.0, bound_const=0.5)
    else:
        if not (0.0 < zero_mass < 1.0):
            raise ValueError(f"zero_mass must lie in (0, 1), got {zero_mass}")
        if tail_cutoff < 2:
            raise ValueError("tail_cutoff must be at least 2")
        coef = 0.5 * (1.0 - zero_mass) / special.zeta(1.0 + rho)
        k = np.arange(1, tail_cutoff + 1, dtype=float)
        table = np.empty(tail_cutoff + 1)
        table[0] = zero_mass
        table[1:] = coef * k ** (-1.0 - rho)
        tail = 2.0 * coef * special.zeta(1.0 + rho, tail_cutoff + 1.0)
        law = IncrementLaw(rho, float(zero_mass), table, float(coef), float(tail), bound_const=float(coef))
    cdf = np.cumsum(np.concatenate(([law.table[0]], 2.0 * law.table[1:])))
    object.__setattr__(law, "_abs_cdf", cdf)
    return law


# ---------------------------------------------------------------------------
# characteristic function and c_rho


def _tail_one_minus_cos(law: IncrementLaw, u: float) -> float:
    """Sum over |k| > cutoff of weight(k) (1 - cos(k u)), by its integral."""
    if law.finite or u == 0.0:
        return 0.0
    K = law.cutoff + 0.5
    if u * K > 200.0:
        return law.tail_mass
    # 2 C [K^-rho / rho - int_K^inf x^(-1-rho) cos(ux) dx]
    osc, _ = integrate.quad(lambda x: x ** (-1.0 - law.rho), K, np.inf, weight="cos", wvar=u, limlst=200)
    return 2.0 * law.tail_coef * (K ** (-law.rho) / law.rho - osc)


def one_minus_char_fn(law: IncrementLaw, u: float) -> float:
    """``1 - psi(u)`` evaluated without cancellation."""
    u = float(u)
    u = math.remainder(u, 2.0 * math.pi)
    if u == 0.0:
        return 0.0
    k = np.arange(1, law.cutoff + 1, dtype=float)
    s = np.sin(0.5 * u * k)
    head = 4.0 * float(np.dot(law.table[1:], s * s))
    return head + _tail_one_minus_cos(law, abs(u))


def char_fn(law: IncrementLaw, u) -> float | np.ndarray:
    """Characteristic function ``psi(u) = sum_k weight(k) cos(k u)``."""
    if np.ndim(u):
        return np.array([1.0 - one_minus_char_fn(law, v) for v in np.ravel(u)]).reshape(np.shape(u))
    return 1.0 - one_minus_char_fn(law, u)


def calibrate_c_rho(law: IncrementLaw, j_start: int = 5, levels: int = 8, rtol: float = 1e-4) -> float:
    """Estimate ``c_rho = lim (1 - psi(u)) / |u|**rho`` as ``u -> 0``.

    The ratio behaves like ``c + b u**kappa + ...`` with ``kappa = 2 - rho``
    (``kappa = 2`` when ``rho == 2``), so consecutive points of the ladder
    ``u = 2**-j`` are combined by Richardson extrapolation.
    """
    rho = law.rho
    kappa = 2.0 if rho == 2.0 else 2.0 - rho
    fac = 2.0 ** kappa
    us = [2.0 ** (-j) for j in range(j_start, j_start + levels + 1)]
    f = [one_minus_char_fn(law, u) / u**rho for u in us]
    extrap = [(fac * f[i + 1] - f[i]) / (fac - 1.0) for i in range(levels)]
    last, prev = extrap[-1], extrap[-2]
    if not (last > 0) or abs(last - prev) > rtol * abs(last):
        raise CalibrationError(f"c_rho ladder did not converge: {prev!r} -> {last!r}")
    return float(last)


# ---------------------------------------------------------------------------
# transition kernels


@dataclass(frozen=True)
class TransitionKernel:
    """``probs[k + window]`` approximates ``P(S_n = k)`` for ``|k| <= window``."""

    n: int
    window: int
    probs: np.ndarray
    tail_mass: float

    def __call__(self, k):
        k = np.asarray(k)
        idx = k + self.window
        ok = (idx >= 0) & (idx < len(self.probs))
        out = np.zeros(k.shape)
        out[ok] = self.probs[idx[ok]]
        return out if out.ndim else float(out)

    @property
    def support(self) -> np.ndarray:
        return np.arange(-self.window, self.window + 1)


def step_on_window(law: IncrementLaw, window: int) -> tuple[np.ndarray, float]:
    """Step law restricted to ``[-window, window]`` and the mass left out.

    Finite laws are returned on their own (shorter) support when it fits.
    """
    if law.finite:
        window = min(window, law.cutoff)
    k = np.arange(-window, window + 1)
    p = law.weight(k)
    return p, max(0.0, 1.0 - math.fsum(p))


def _combine(a: np.ndarray, ta: float, b: np.ndarray, tb: float, window: int, direct: bool):
    c = np.convolve(a, b) if direct else signal.fftconvolve(a, b)
    np.clip(c, 0.0, None, out=c)
    mid = (len(c) - 1) // 2
    w = min(window, mid)
    keep = c[mid - w: mid + w + 1]
    lost = math.fsum(c[: mid - w]) + math.fsum(c[mid + w + 1:])
    tail = ta + tb - ta * tb + lost
    s = math.fsum(keep)
    if s > 0:
        keep = keep * ((1.0 - tail) / s)
    return keep, tail


def transition_kernel(law: IncrementLaw, n: int, window: int | None = None) -> TransitionKernel:
    """n-step distribution by binary doubling of the window-truncated step law."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if window is None:
        window = default_window(law, n)
    window = int(window)
    result = np.ones(1)
    tr = 0.0
    base, tb = step_on_window(law, window)
    direct = law.finite
    m = n
    while m:
        if m & 1:
            result, tr = _combine(result, tr, base, tb, window, direct)
        m >>= 1
        if m:
            base, tb = _combine(base, tb, base, tb, window, direct)
        if tr > MAX_TAIL_MASS:
            raise KernelWindowError(f"window {window} loses mass {tr:.3g} > {MAX_TAIL_MASS} at n={n}")
    pad = window - (len(result) - 1) // 2
    result = np.pad(result, pad)
    return TransitionKernel(int(n), window, result, float(tr))


def default_window(law: IncrementLaw, n: int) -> int:
    """A window that keeps the tail mass of ``P_n`` well below 1e-3."""
    scale = max(1.0, n ** (1.0 / law.rho))
    if law.finite:
        return int(min(2 * n, math.ceil(10.0 * scale) + 4)) if n else 1
    return int(math.ceil(48.0 * scale)) + 8


def return_probabilities(law: IncrementLaw, n_max: int, window: int | None = None):
    """``P_s(0)`` for ``s = 0 .. 2 n_max`` with per-entry error bounds.

    Kernels ``P_m`` for ``m <= n_max`` are built one step at a time; the
    even and odd return probabilities follow from ``P_{2m}(0) = <P_m, P_m>``
    and ``P_{2m-1}(0) = <P_m, P_{m-1}>`` by symmetry of the law.
    """
    if window is None:
        window = default_window(law, n_max)
    step, ts = step_on_window(law, window)
    direct = law.finite
    out = np.zeros(2 * n_max + 1)
    err = np.zeros(2 * n_max + 1)
    prev = np.ones(1)
    tprev = 0.0
    out[0] = 1.0
    for m in range(1, n_max + 1):
        cur, tcur = _combine(prev, tprev, step, ts, window, direct)
        if tcur > MAX_TAIL_MASS:
            raise KernelWindowError(f"window {window} loses mass {tcur:.3g} at step {m}")
        h = (len(cur) - len(prev)) // 2
        out[2 * m - 1] = math.fsum(cur[h: len(cur) - h] * prev)
        out[2 * m] = math.fsum(cur * cur)
        err[2 * m - 1] = tcur + tprev
        err[2 * m] = 2.0 * tcur
        prev, tprev = cur, tcur
    return out, err


def kernel_bound_ratio(kern: TransitionKernel, rho: float) -> float:
    """``max_k P_n(k) / (n^(-1/rho) min(|k n^(-1/rho)|^(-1-rho), 1))``."""
    if kern.n == 0:
        return 1.0
    a = kern.n ** (1.0 / rho)
    x = np.abs(kern.support) / a
    env = np.minimum(np.where(x > 0, x, 1.0) ** (-1.0 - rho), 1.0) / a
    return float(np.max(kern.probs / env))


# ---------------------------------------------------------------------------
# sampling


def sample_increments(law: IncrementLaw, size, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. steps by inverse CDF on ``|Y|`` plus a random sign."""
    u = rng.random(size)
    sign = rng.integers(0, 2, size=size, dtype=np.int8) * 2 - 1
    cdf = law._abs_cdf
    a = np.searchsorted(cdf, u, side="right")
    if not law.finite:
        far = a >= len(cdf)
        if np.any(far):
            # continuous Pareto inversion of the analytic tail
            v = (u[far] - cdf[-1]) / max(law.tail_mass, 1e-300)
            v = np.clip(1.0 - v, 1e-300, 1.0)
            a[far] = np.floor((law.cutoff + 0.5) * v ** (-1.0 / law.rho) + 0.5).astype(np.int64)
    else:
        a = np.minimum(a, law.cutoff)
    return a.astype(np.int64) * sign


def sample_path(law: IncrementLaw, length: int, start: int, rng: np.random.Generator) -> np.ndarray:
    """Return ``(S_1, ..., S_length)`` for a walk with ``S_0 = start``."""
    if length < 1:
        raise ValueError("length must be at least 1")
    return start + np.cumsum(sample_increments(law, length, rng))


# ---------------------------------------------------------------------------
# limiting stable density


@dataclass(frozen=True)
class StableDensity:
    """Density of the symmetric stable law with char. function ``exp(-c t |eta|^rho)``."""

    rho: float
    c_rho: float

    def __call__(self, t, x):
        return stable_density(self, t, x)

    def at_zero(self, t=1.0):
        return t ** (-1.0 / self.rho) * _g1_zero(self.rho, self.c_rho)


def _g1_zero(rho: float, c: float) -> float:
    return math.gamma(1.0 + 1.0 / rho) / (math.pi * c ** (1.0 / rho))


_Y_SWITCH = 40.0
_Y_STEP = 0.02


def _g1_quad(rho: float, c: float, y: float) -> float:
    f = lambda eta: math.exp(-c * eta**rho)
    if y == 0.0:
        return _g1_zero(rho, c)
    if y < 1.0:
        val, _ = integrate.quad(lambda e: math.cos(y * e) * f(e), 0.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-12)
    else:
        val, _ = integrate.quad(f, 0.0, np.inf, weight="cos", wvar=y, limlst=200, epsabs=1e-13)
    return val / math.pi


def _g1_asymptotic(rho: float, c: float, y: np.ndarray, terms: int = 6) -> np.ndarray:
    out = np.zeros_like(y)
    for j in range(1, terms + 1):
        coef = (-1) ** (j + 1) / math.factorial(j) * math.gamma(j * rho + 1.0) * math.sin(j * math.pi * rho / 2.0)
        out += coef * c**j * y ** (-j * rho - 1.0)
    return out / math.pi


@lru_cache(maxsize=16)
def _g1_spline(rho: float, c: float) -> CubicSpline:
    # the density lives on scale c^(1/rho); build the table in that unit
    scale = c ** (1.0 / rho)
    ys = np.arange(0.0, _Y_SWITCH + _Y_STEP / 2, _Y_STEP)
    vals = np.array([_g1_quad(rho, 1.0, y) for y in ys]) / scale
    return CubicSpline(ys * scale, vals, bc_type=((1, 0.0), "not-a-knot"))


def _g1(rho: float, c: float, y) -> np.ndarray:
    y = np.abs(np.asarray(y, dtype=float))
    if rho == 2.0:
        var = 2.0 * c
        return np.exp(-0.5 * y * y / var) / math.sqrt(2.0 * math.pi * var)
    spl = _g1_spline(rho, c)
    ymax = _Y_SWITCH * c ** (1.0 / rho)
    near = y <= ymax
    out = np.empty_like(y)
    out[near] = spl(y[near])
    if np.any(~near):
        out[~near] = _g1_asymptotic(rho, c, y[~near])
    return out


def stable_density(sd: StableDensity, t, x):
    """``g(t, x) = t^(-1/rho) g(1, t^(-1/rho) x)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("stable_density needs t > 0")
    s = t ** (-1.0 / sd.rho)
    out = s * _g1(sd.rho, sd.c_rho, s * np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def llt_residual(law: IncrementLaw, n: int, c_rho: float | None = None) -> float:
    """``sup_k |n^(1/rho) P_n(k) - g(1, k n^(-1/rho))|`` over the kernel window."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if c_rho is None:
        c_rho = calibrate_c_rho(law)
    a = n ** (1.0 / law.rho)
    width = 8 if law.finite else 32
    window = int(math.ceil(width * a))
    if law.finite:
        window = max(1, min(window, 2 * n))
    kern = transition_kernel(law, n, window)
    sd = StableDensity(law.rho, c_rho)
    g = stable_density(sd, 1.0, kern.support / a)
    return float(np.max(np.abs(a * kern.probs - g)))
