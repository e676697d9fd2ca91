"""Inner products with the singular time weight ``|s - t|^(2H-2)``.

The central object is a quadrature rule for

    int_0^1 int_0^1 |s - t|^(2H-2) F(s, t) ds dt

for ``F`` smooth on the blocks of a time partition.  Diagonal blocks are cut
along ``s = t`` into two triangles and each triangle is mapped to the unit
square with a Duffy transform collapsing at the block's upper corner; blocks
that touch at a corner are split along their diagonal and treated the same
way.  After the transform the singular factors are pure powers of the new
coordinates and are absorbed into Gauss-Jacobi weights.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

NODE_BUDGET = 10**8


# ---------------------------------------------------------------------------
# closed forms


def _alpha(H: float) -> float:
    if not (0.5 < H <= 1.0):
        raise ValueError(f"H must lie in (1/2, 1], got {H}")
    return 2.0 * H - 2.0


def weight_antiderivative(H: float, x):
    """``Phi`` with ``Phi'' = |x|^(2H-2)`` and ``Phi(0) = 0``."""
    x = np.abs(np.asarray(x, dtype=float))
    if H == 1.0:
        return 0.5 * x * x
    return x ** (2.0 * H) / (2.0 * H * (2.0 * H - 1.0))


def block_weight(H: float, a0, a1, b0, b1):
    """``int_{a0}^{a1} int_{b0}^{b1} |s - t|^(2H-2) dt ds`` in closed form."""
    P = lambda x: weight_antiderivative(H, x)
    return P(np.subtract(a1, b0)) + P(np.subtract(a0, b1)) - P(np.subtract(a1, b1)) - P(np.subtract(a0, b0))


def time_square_integral(H: float, s: float, t: float) -> float:
    """``int_s^t int_s^t |r - r'|^(2H-2) dr dr'``."""
    _alpha(H)
    if not (0.0 <= s < t <= 1.0):
        raise ValueError("need 0 <= s < t <= 1")
    if H == 1.0:
        return (t - s) ** 2
    return (t - s) ** (2.0 * H) / (H * (2.0 * H - 1.0))


def simplex_gamma_integral(alphas: Sequence[float], t: float) -> float:
    """``int_{0<r_1<...<r_m<t} prod (r_i - r_{i-1})^(-alpha_i) dr``.

    Equals ``prod Gamma(1 - alpha_i) / Gamma(m - alpha + 1) * t^(m - alpha)``.
    """
    alphas = [float(a) for a in alphas]
    if any(a >= 1.0 for a in alphas):
        raise ValueError("every alpha_i must be < 1")
    if t <= 0:
        raise ValueError("t must be positive")
    m, a = len(alphas), math.fsum(alphas)
    log_val = math.fsum(special.gammaln(1.0 - x) for x in alphas) - special.gammaln(m - a + 1.0)
    return math.exp(log_val + (m - a) * math.log(t))


def simplex_gamma_quadrature(alphas: Sequence[float], t: float, epsrel: float = 1e-10) -> float:
    """Nested adaptive quadrature of the simplex integral (independent check).

    Uses ``I_j(u) = int_0^u (u - r)^(-alpha_j) I_{j-1}(r) dr`` with the
    algebraic endpoint weight handled by QAWS.
    """
    alphas = list(alphas)

    def I(j: int, u: float) -> float:
        if j == 0:
            return 1.0
        if u <= 0:
            return 0.0
        val, _ = integrate.quad(lambda r: I(j - 1, r), 0.0, u, weight="alg", wvar=(0.0, -alphas[j - 1]),
                                epsabs=0.0, epsrel=epsrel, limit=200)
        return val

    return I(len(alphas), t)


# ---------------------------------------------------------------------------
# node rules


@lru_cache(maxsize=256)
def _jacobi01(n: int, power: float):
    """Gauss rule on [0, 1] for weight ``x^power``."""
    y, w = special.roots_jacobi(n, 0.0, power)
    return (1.0 + y) / 2.0, w / 2.0 ** (power + 1.0)


@lru_cache(maxsize=256)
def _legendre01(n: int):
    y, w = np.polynomial.legendre.leggauss(n)
    return (1.0 + y) / 2.0, w / 2.0


@dataclass(frozen=True)
class PairRule:
    """Nodes ``(s, t)`` and weights for ``int int |s-t|^(2H-2) F(s,t)``."""

    s: np.ndarray
    t: np.ndarray
    w: np.ndarray

    def __len__(self) -> int:
        return len(self.w)

    def integrate(self, F: Callable) -> float:
        return math.fsum(self.w * F(self.s, self.t))


def _triangle_rule(corner, L, alpha, kappa, n, swap):
    """Triangle ``{corner-L <= t <= s <= corner}`` collapsed at ``(corner, corner)``.

    ``v = corner - t``, ``corner - s = v w``: weight ``v^(1+alpha+kappa) (1-w)^alpha``.
    ``kappa`` is an extra power of the distance to the corner carried by F.
    """
    yv, wv = _jacobi01(n, 1.0 + alpha + kappa)
    yw, ww = _jacobi01(n, alpha)  # in z = 1 - w
    v = L * yv
    z = yw
    V, Z = np.meshgrid(v, z, indexing="ij")
    W = np.outer(wv * L ** (2.0 + alpha + kappa), ww)
    s = corner - V * (1.0 - Z)
    t = corner - V
    # F carries (dist)^kappa; divide it out so the weight absorbs it
    if kappa != 0.0:
        W = W / V**kappa
    s, t, W = s.ravel(), t.ravel(), W.ravel()
    return (t, s, W) if swap else (s, t, W)


def _corner_rect_rule(c, A, B, alpha, n, s_below):
    """Rectangle ``[c-A, c] x [c, c+B]`` (s below, t above), split on its diagonal."""
    yx, wx = _jacobi01(n, 1.0 + alpha)
    ye, we = _legendre01(n)
    X, E = np.meshgrid(yx, ye, indexing="ij")
    WX = np.outer(wx, we)
    # triangle 1: u = A x, v = B x e
    u1, v1 = A * X, B * X * E
    w1 = WX * A * B * (A + B * E) ** alpha
    # triangle 2: v = B x, u = A x e
    u2, v2 = A * X * E, B * X
    w2 = WX * A * B * (B + A * E) ** alpha
    u = np.concatenate((u1.ravel(), u2.ravel()))
    v = np.concatenate((v1.ravel(), v2.ravel()))
    w = np.concatenate((w1.ravel(), w2.ravel()))
    s, t = c - u, c + v
    return (s, t, w) if s_below else (t, s, w)


def _tensor_rule(a0, a1, b0, b1, alpha, n):
    y, wy = _legendre01(n)
    s = a0 + (a1 - a0) * y
    t = b0 + (b1 - b0) * y
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(wy * (a1 - a0), wy * (b1 - b0)) * np.abs(S - T) ** alpha
    return S.ravel(), T.ravel(), W.ravel()


def pair_rule(H: float, breaks: Sequence[float] = (), n: int = 16, corner_power: float = 0.0) -> PairRule:
    """Quadrature rule for the singular time weight on ``[0, 1]^2``.

    ``breaks`` are interior points where F may be discontinuous.
    ``corner_power`` declares that F behaves like ``(2 - s - t)^corner_power``
    near ``(1, 1)``; it is absorbed into the weights of the last diagonal block.
    """
    alpha = _alpha(H)
    edges = np.unique(np.concatenate(([0.0, 1.0], np.asarray(breaks, dtype=float))))
    edges = edges[(edges >= 0.0) & (edges <= 1.0)]
    B = len(edges) - 1
    parts = []
    for a in range(B):
        for b in range(B):
            a0, a1, b0, b1 = edges[a], edges[a + 1], edges[b], edges[b + 1]
            if a == b:
                kappa = corner_power if a == B - 1 else 0.0
                L = a1 - a0
                for swap in (False, True):
                    parts.append(_triangle_rule(a1, L, alpha, kappa, n, swap))
            elif b == a + 1:
                parts.append(_corner_rect_rule(a1, a1 - a0, b1 - b0, alpha, n, s_below=True))
            elif a == b + 1:
                parts.append(_corner_rect_rule(b1, b1 - b0, a1 - a0, alpha, n, s_below=False))
            else:
                parts.append(_tensor_rule(a0, a1, b0, b1, alpha, n))
    s = np.concatenate([p[0] for p in parts])
    t = np.concatenate([p[1] for p in parts])
    w = np.concatenate([p[2] for p in parts])
    return PairRule(s, t, w)


def spatial_rule(R: float, breaks: Sequence[float] = (), n: int = 16):
    """Composite Gauss-Legendre nodes on ``[-R, R]`` split at ``breaks``."""
    edges = np.unique(np.concatenate(([-R, R], np.asarray(breaks, dtype=float))))
    edges = edges[(edges >= -R) & (edges <= R)]
    y, wy = _legendre01(n)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs.append(lo + (hi - lo) * y)
        ws.append((hi - lo) * wy)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass
class QuadResult:
    value: float
    error: float
    converged: bool
    nodes: int
    method: str = "quadrature"

    def __float__(self) -> float:
        return float(self.value)


def singular_time_integral(F: Callable, H: float, breaks: Sequence[float] = (), corner_power: float = 0.0,
                           tol: float = 1e-10, n_start: int = 8, n_max: int = 128) -> QuadResult:
    """``int_0^1 int_0^1 |s-t|^(2H-2) F(s, t) ds dt`` with refinement by doubling."""
    prev = None
    n = n_start
    while n <= n_max:
        rule = pair_rule(H, breaks, n, corner_power)
        val = rule.integrate(F)
        if prev is not None:
            err = abs(val - prev)
            if err <= tol * max(1.0, abs(val)):
                return QuadResult(val, err, True, len(rule))
        prev = val
        n *= 2
    return QuadResult(val, err, False, len(rule))


# ---------------------------------------------------------------------------
# kernel functions


@dataclass
class KernelFn:
    """Function on ``([0,1] x R)^m`` vanishing for ``|x_i| > support``.

    ``func(t, x)`` receives arrays of shape ``(P, m)`` and returns shape ``(P,)``.
    ``t_breaks``/``x_breaks`` list known discontinuity locations (per axis).
    """

    m: int
    func: Callable
    support: float
    t_breaks: tuple = ()
    x_breaks: tuple = ()

    def __call__(self, t, x):
        t = np.atleast_2d(np.asarray(t, dtype=float))
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.asarray(self.func(t, x), dtype=float)
        return np.where(np.all(np.abs(x) <= self.support, axis=1), out, 0.0)

    def abs(self) -> "KernelFn":
        return KernelFn(self.m, lambda t, x, f=self.func: np.abs(f(t, x)), self.support, self.t_breaks, self.x_breaks)

    def scale(self, c: float) -> "KernelFn":
        return KernelFn(self.m, lambda t, x, f=self.func: c * f(t, x), self.support, self.t_breaks, self.x_breaks)


def indicator_unit(m: int = 1, x_lo: float = 0.0, x_hi: float = 1.0) -> KernelFn:
    """``1_{[0,1] x [x_lo, x_hi]}`` in each coordinate pair."""
    def f(t, x):
        inside = (t >= 0) & (t <= 1) & (x >= x_lo) & (x < x_hi)
        return np.all(inside, axis=1).astype(float)
    R = max(abs(x_lo), abs(x_hi))
    return KernelFn(m, f, R, (), (x_lo, x_hi))


@dataclass
class PiecewiseConstant:
    """``m = 1`` function constant on cells ``(t_e[i], t_e[i+1]] x [x_e[j], x_e[j+1])``."""

    t_edges: np.ndarray
    x_edges: np.ndarray
    values: np.ndarray
    m: int = field(default=1, init=False)

    def __post_init__(self):
        self.t_edges = np.asarray(self.t_edges, dtype=float)
        self.x_edges = np.asarray(self.x_edges, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.t_edges) - 1, len(self.x_edges) - 1):
            raise ValueError("values shape does not match edges")

    @property
    def support(self) -> float:
        return float(np.max(np.abs(self.x_edges)))

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(-1)
        i = np.searchsorted(self.t_edges, t, side="left") - 1
        j = np.searchsorted(self.x_edges, x, side="right") - 1
        ok = (i >= 0) & (i < self.values.shape[0]) & (j >= 0) & (j < self.values.shape[1])
        out = np.zeros(t.shape)
        out[ok] = self.values[i[ok], j[ok]]
        return out

    def as_kernel(self) -> KernelFn:
        return KernelFn(1, lambda t, x: self(t[:, 0], x[:, 0]), self.support,
                        tuple(self.t_edges[1:-1]), tuple(self.x_edges))

    def abs(self) -> "PiecewiseConstant":
        return PiecewiseConstant(self.t_edges, self.x_edges, np.abs(self.values))

    def scale(self, c: float) -> "PiecewiseConstant":
        return PiecewiseConstant(self.t_edges, self.x_edges, c * self.values)

    def refine(self, t_edges, x_edges) -> np.ndarray:
        """Values on a finer product grid containing this one's edges."""
        tm = 0.5 * (np.asarray(t_edges)[1:] + np.asarray(t_edges)[:-1])
        xm = 0.5 * (np.asarray(x_edges)[1:] + np.asarray(x_edges)[:-1])
        T, X = np.meshgrid(tm, xm, indexing="ij")
        return self(T.ravel(), X.ravel()).reshape(T.shape)


def pc_inner_exact(f: PiecewiseConstant, g: PiecewiseConstant, H: float) -> float:
    """Closed-form inner product of two piecewise-constant functions."""
    te = np.union1d(f.t_edges, g.t_edges)
    xe = np.union1d(f.x_edges, g.x_edges)
    fv, gv = f.refine(te, xe), g.refine(te, xe)
    dx = np.diff(xe)
    F = (fv * dx) @ gv.T  # F[a, b] = int f(s_a, x) g(t_b, x) dx
    a0, a1 = te[:-1, None], te[1:, None]
    b0, b1 = te[None, :-1], te[None, 1:]
    W = block_weight(H, a0, a1, b0, b1)
    return float(np.sum(F * W))


def time_inner_exact(f_edges, f_vals, g_edges, g_vals, H: float) -> float:
    """``int int |s-t|^(2H-2) f(s) g(t)`` for step functions of time only."""
    one = np.array([0.0, 1.0])
    f = PiecewiseConstant(f_edges, one, np.asarray(f_vals, dtype=float)[:, None])
    g = PiecewiseConstant(g_edges, one, np.asarray(g_vals, dtype=float)[:, None])
    return pc_inner_exact(f, g, H)


# ---------------------------------------------------------------------------
# inner products


def _as_kernel(f) -> KernelFn:
    return f.as_kernel() if isinstance(f, PiecewiseConstant) else f


def h_inner(f, g, H: float, tol: float = 1e-9, method: str = "auto", full_output: bool = False,
            n_start: int = 8, n_max: int = 64, rng: np.random.Generator | None = None, mc_nodes: int = 10**6):
    """Inner product ``<f, g>`` with the weight ``prod_i |s_i - t_i|^(2H-2)``.

    ``method`` is ``"exact"`` (piecewise-constant closed form), ``"quadrature"``,
    ``"mc"`` or ``"auto"``.  Unconverged quadrature triggers a warning (or is
    reported in the returned :class:`QuadResult` when ``full_output``).
    """
    if f.m != g.m:
        raise ValueError("tensor orders differ")
    _alpha(H)
    if method == "auto":
        method = "exact" if isinstance(f, PiecewiseConstant) and isinstance(g, PiecewiseConstant) else "quadrature"
    if method == "exact":
        res = QuadResult(pc_inner_exact(f, g, H), 0.0, True, 0, "exact")
    else:
        fk, gk = _as_kernel(f), _as_kernel(g)
        if method == "quadrature":
            res = _inner_quadrature(fk, gk, H, tol, n_start, n_max)
            if res is None:
                method = "mc"
        if method == "mc":
            res = _inner_mc(fk, gk, H, rng if rng is not None else np.random.default_rng(0), mc_nodes)
    if not res.converged and not full_output:
        warnings.warn(f"h_inner did not reach tol={tol}: estimate {res.value!r} +- {res.error!r}", RuntimeWarning)
    return res if full_output else res.value


def _inner_value(fk: KernelFn, gk: KernelFn, H: float, n: int):
    m = fk.m
    tb = tuple(sorted(set(fk.t_breaks) | set(gk.t_breaks)))
    xb = tuple(sorted(set(fk.x_breaks) | set(gk.x_breaks)))
    R = max(fk.support, gk.support)
    rule = pair_rule(H, tb, n)
    xs, wx = spatial_rule(R, xb, n)
    P, X = len(rule), len(xs)
    if (P * X) ** m > NODE_BUDGET:
        return None
    if m == 1:
        S = np.repeat(rule.s, X)[:, None]
        T = np.repeat(rule.t, X)[:, None]
        XX = np.tile(xs, P)[:, None]
        fv = fk(S, XX).reshape(P, X)
        gv = gk(T, XX).reshape(P, X)
        return math.fsum(rule.w * ((fv * gv) @ wx)), P * X
    # m == 2 (general m handled recursively over the first axis pair)
    if m != 2:
        raise NotImplementedError("tensor quadrature implemented for m <= 2; use method='mc'")
    t2s = np.repeat(rule.s, X)
    t2t = np.repeat(rule.t, X)
    x2 = np.tile(xs, P)
    w2 = np.repeat(rule.w, X) * np.tile(wx, P)
    total = []
    for i in range(P):
        for j in range(X):
            s_arr = np.column_stack((np.full(P * X, rule.s[i]), t2s))
            t_arr = np.column_stack((np.full(P * X, rule.t[i]), t2t))
            x_arr = np.column_stack((np.full(P * X, xs[j]), x2))
            total.append(rule.w[i] * wx[j] * math.fsum(w2 * fk(s_arr, x_arr) * gk(t_arr, x_arr)))
    return math.fsum(total), (P * X) ** 2


def _inner_quadrature(fk, gk, H, tol, n_start, n_max):
    n, prev, err = n_start, None, float("inf")
    last = None
    while n <= n_max:
        out = _inner_value(fk, gk, H, n)
        if out is None:
            break
        val, nodes = out
        last = (val, nodes)
        if prev is not None:
            err = abs(val - prev)
            if err <= tol * max(1.0, abs(val)):
                return QuadResult(val, err, True, nodes)
        prev = val
        n *= 2
    if last is None:
        return None
    return QuadResult(last[0], err, False, last[1])


def sample_time_pairs(H: float, size: int, rng: np.random.Generator, u=None):
    """Draw ``(s, t)`` on ``[0,1]^2`` with density ``prop. to |s-t|^(2H-2)``.

    Returns ``(s, t, w)`` where ``w`` is the importance weight so that
    ``E[w F(s,t)] = int int |s-t|^(2H-2) F``.  ``u`` optionally supplies the
    three driving uniforms (shape ``(size, 3)``) for stratified designs.
    """
    alpha = _alpha(H)
    if u is None:
        u = rng.random((size, 3))
    d = u[:, 0] ** (1.0 / (alpha + 1.0))
    lo = u[:, 1] * (1.0 - d)
    flip = u[:, 2] < 0.5
    s = np.where(flip, lo + d, lo)
    t = np.where(flip, lo, lo + d)
    w = 2.0 * (1.0 - d) / (alpha + 1.0)
    return s, t, w


def _inner_mc(fk, gk, H, rng, nodes):
    m = fk.m
    R = max(fk.support, gk.support)
    reps = 10
    per = max(1, nodes // reps)
    ests = []
    for _ in range(reps):
        w = np.ones(per)
        S, T, X = [], [], []
        for _ax in range(m):
            s, t, wi = sample_time_pairs(H, per, rng)
            x = rng.uniform(-R, R, per)
            S.append(s), T.append(t), X.append(x)
            w = w * wi * 2.0 * R
        S, T, X = np.column_stack(S), np.column_stack(T), np.column_stack(X)
        ests.append(float(np.mean(w * fk(S, X) * gk(T, X))))
    ests = np.array(ests)
    return QuadResult(float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(reps)), True, per * reps, "mc")


def b_norm(f, H: float, **kw) -> float:
    """``sqrt(<|f|, |f|>)``."""
    fa = f.abs()
    return math.sqrt(max(0.0, float(h_inner(fa, fa, H, **kw))))


# ---------------------------------------------------------------------------
# block averages


@dataclass
class BlockGrid:
    """Cell averages of an order-``m`` function on the ``N``-grid.

    Time cell ``n`` (1-based) is ``((n-1)/N, n/N]``; space cell ``k`` is
    ``[k h, (k+1) h)`` with ``h = N^(-1/rho)``.  ``values`` has shape
    ``(N, K)`` for ``m = 1`` and ``(N, K, N, K)`` for ``m = 2``, where space
    cell ``k`` sits at index ``k - k_lo``.
    """

    N: int
    rho: float
    m: int
    k_lo: int
    values: np.ndarray

    @property
    def h(self) -> float:
        return self.N ** (-1.0 / self.rho)

    @property
    def n_space(self) -> int:
        return self.values.shape[1]

    def sites(self) -> np.ndarray:
        return np.arange(self.k_lo, self.k_lo + self.n_space)

    def as_piecewise(self) -> PiecewiseConstant:
        if self.m != 1:
            raise ValueError("only m = 1 grids convert to PiecewiseConstant")
        te = np.arange(self.N + 1) / self.N
        xe = (self.k_lo + np.arange(self.n_space + 1)) * self.h
        return PiecewiseConstant(te, xe, self.values)

    def as_kernel(self) -> KernelFn:
        if self.m == 1:
            return self.as_piecewise().as_kernel()
        N, h, k_lo, K = self.N, self.h, self.k_lo, self.n_space
        vals = self.values

        def f(t, x):
            n = np.ceil(t * N).astype(int) - 1
            k = np.floor(x / h).astype(int) - k_lo
            ok = np.all((n >= 0) & (n < N) & (k >= 0) & (k < K), axis=1)
            out = np.zeros(len(t))
            nn, kk = n[ok], k[ok]
            out[ok] = vals[nn[:, 0], kk[:, 0], nn[:, 1], kk[:, 1]]
            return out

        R = max(abs(k_lo), abs(k_lo + K)) * h
        return KernelFn(2, f, R)


def _space_cells(R: float, h: float):
    k_lo = int(math.floor(-R / h))
    k_hi = int(math.ceil(R / h)) - 1
    return k_lo, k_hi - k_lo + 1


def block_average(f, N: int, rho: float) -> BlockGrid:
    """Cell means of ``f`` with a 2-point midpoint rule per axis (``4^m`` points per cell)."""
    if N < 1:
        raise ValueError("N must be positive")
    fk = _as_kernel(f)
    m = fk.m
    h = N ** (-1.0 / rho)
    k_lo, K = _space_cells(fk.support, h)
    # two sub-cell midpoints per axis
    tq = ((np.arange(N)[:, None] + np.array([0.25, 0.75])[None, :]) / N).ravel()  # (2N,)
    xq = ((k_lo + np.arange(K)[:, None] + np.array([0.25, 0.75])[None, :]) * h).ravel()  # (2K,)
    if m == 1:
        T, X = np.meshgrid(tq, xq, indexing="ij")
        v = fk(T.reshape(-1, 1), X.reshape(-1, 1)).reshape(N, 2, K, 2)
        return BlockGrid(N, rho, 1, k_lo, v.mean(axis=(1, 3)))
    if m == 2:
        T, X = np.meshgrid(tq, xq, indexing="ij")
        T, X = T.ravel(), X.ravel()
        Q = len(T)
        t1 = np.repeat(T, Q)
        x1 = np.repeat(X, Q)
        t2 = np.tile(T, Q)
        x2 = np.tile(X, Q)
        if len(t1) > 5 * 10**7:
            raise MemoryError("block grid too large for m = 2")
        v = fk(np.column_stack((t1, t2)), np.column_stack((x1, x2)))
        v = v.reshape(N, 2, K, 2, N, 2, K, 2)
        out = v.mean(axis=(1, 3, 5, 7))
        return BlockGrid(N, rho, 2, k_lo, out)
    raise NotImplementedError("block_average supports m <= 2")


def average_time_only(f: PiecewiseConstant, N: int) -> PiecewiseConstant:
    """Exact time average on the cells ``((n-1)/N, n/N]``."""
    te = np.union1d(f.t_edges, np.arange(N + 1) / N)
    te = te[(te >= 0) & (te <= 1)]
    fine = f.refine(te, f.x_edges)
    cell = np.clip(np.ceil(0.5 * (te[1:] + te[:-1]) * N).astype(int) - 1, 0, N - 1)
    dt = np.diff(te)
    out = np.zeros((N, len(f.x_edges) - 1))
    np.add.at(out, cell, fine * dt[:, None])
    return PiecewiseConstant(np.arange(N + 1) / N, f.x_edges, out * N)


def average_space_only(f: PiecewiseConstant, N: int, rho: float) -> PiecewiseConstant:
    """Exact space average on the cells ``[k h, (k+1) h)``."""
    h = N ** (-1.0 / rho)
    k_lo, K = _space_cells(f.support, h)
    cells = (k_lo + np.arange(K + 1)) * h
    xe = np.union1d(f.x_edges, cells)
    xe = xe[(xe >= cells[0]) & (xe <= cells[-1])]
    fine = f.refine(f.t_edges, xe)
    idx = np.clip(np.floor(0.5 * (xe[1:] + xe[:-1]) / h).astype(int) - k_lo, 0, K - 1)
    out = np.zeros((len(f.t_edges) - 1, K))
    np.add.at(out.T, idx, (fine * np.diff(xe)[None, :]).T)
    return PiecewiseConstant(f.t_edges, cells, out / h)


def average_exact(f: PiecewiseConstant, N: int, rho: float) -> PiecewiseConstant:
    return average_time_only(average_space_only(f, N, rho), N)


def time_jensen_constant(H: float) -> float:
    """Constant from the cell-by-cell comparison for time averaging.

    ``max(int_0^1 int_0^1 w, 2^(2-2H) int_1^2 int_0^1 w, 3^(2-2H))``.
    """
    c_diag = float(block_weight(H, 0.0, 1.0, 0.0, 1.0))
    c_adj = 2.0 ** (2.0 - 2.0 * H) * float(block_weight(H, 1.0, 2.0, 0.0, 1.0))
    return max(c_diag, c_adj, 3.0 ** (2.0 - 2.0 * H))
