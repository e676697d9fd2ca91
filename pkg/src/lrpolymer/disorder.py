"""Gaussian environment correlated in time and independent across sites.

Each spatial site ``k`` carries a stationary Gaussian sequence
``omega(1, k), ..., omega(N, k)`` with covariance ``gamma(n - n')``.  The
sequence for a site is synthesized in one shot by circulant embedding from a
random stream keyed by ``mix(master_seed, k)``, and cached.
"""
from __future__ import annotations

import math
import os
import struct
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import mix, substream

DUMP_MAGIC = b"DFLD"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sIIf")


class EmbeddingError(RuntimeError):
    """Circulant embedding stayed indefinite after the allowed enlargements."""


def _check_H(H: float) -> None:
    if not (0.5 < H <= 1.0):
        raise ValueError(f"H must lie in (1/2, 1], got {H}")


def gamma_fgn(H: float, n):
    """Normalized fractional Gaussian noise autocovariance.

    ``(|n+1|^2H - 2|n|^2H + |n-1|^2H) / (2H(2H-1))`` so that
    ``N^(2-2H) gamma(N t) -> |t|^(2H-2)``.  Identically one for ``H = 1``.
    """
    _check_H(H)
    shape = np.shape(n)
    n = np.atleast_1d(np.abs(np.asarray(n, dtype=float)))
    if H == 1.0:
        out = np.ones_like(n)
    else:
        h2 = 2.0 * H
        out = ((n + 1.0) ** h2 - 2.0 * n**h2 + np.abs(n - 1.0) ** h2) / (h2 * (h2 - 1.0))
        # the second difference cancels badly for large lags; use its binomial expansion
        # n^(2H-2) * sum_{k even} 2 (p-2)...(p-k+1) / k! * n^(2-k) with p = 2H
        big = n > 16
        if np.any(big):
            nb = n[big]
            inv2 = nb ** -2.0
            total = np.ones_like(nb)
            coef, power = 1.0, np.ones_like(nb)
            for k in range(3, 15):
                coef *= (h2 - k + 1) / k
                if k % 2 == 0:
                    power = power * inv2
                    total += coef * power
            out[big] = nb ** (h2 - 2.0) * total
    return out.reshape(shape) if shape else float(out[0])


@dataclass(frozen=True)
class TemporalCovariance:
    """Pluggable stationary covariance ``n -> gamma(n)``."""

    H: float
    eval: Callable = None
    scale: float = 1.0

    def __post_init__(self):
        _check_H(self.H)
        if self.eval is None:
            object.__setattr__(self, "eval", lambda n, H=self.H: gamma_fgn(H, n))

    def __call__(self, n):
        out = self.eval(n)
        return out * self.scale if self.scale != 1.0 else out

    def table(self, N: int) -> np.ndarray:
        """``gamma(0), ..., gamma(N - 1)``."""
        return np.asarray(self(np.arange(N)), dtype=float)


def scaled_covariance(H: float, N: int, t) -> float:
    """``gamma_N(t) = N^(2-2H) gamma(floor(|t| N))``."""
    if N < 1:
        raise ValueError("N must be positive")
    lag = np.floor(np.abs(np.asarray(t, dtype=float)) * N)
    out = N ** (2.0 - 2.0 * H) * np.asarray(gamma_fgn(H, lag))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# circulant embedding


def _embedding_eigs(gam: np.ndarray, cov: TemporalCovariance, N: int, max_doublings: int = 4):
    M = N
    for _ in range(max_doublings + 1):
        g = gam if M == N else cov.table(M)
        row = np.concatenate((g, g[-2:0:-1])) if M > 1 else g.copy()
        lam = np.fft.fft(row).real
        if lam.min() >= -1e-9 * max(1.0, lam.max()):
            return np.clip(lam, 0.0, None)
        M *= 2
    raise EmbeddingError(f"circulant embedding indefinite for N={N}")


class _EigCache:
    def __init__(self):
        self._d = {}
        self._lock = threading.Lock()

    def get(self, cov: TemporalCovariance, N: int) -> np.ndarray:
        key = (id(cov), N)
        hit = self._d.get(key)
        if hit is None:
            lam = _embedding_eigs(cov.table(N), cov, N)
            with self._lock:
                hit = self._d.setdefault(key, (cov, lam))
        return hit[1]


_EIGS = _EigCache()


def generate_site_sequence(cov: TemporalCovariance, N: int, site_seed: int) -> np.ndarray:
    """Stationary Gaussian sequence of length ``N`` with covariance ``cov``."""
    if N < 1:
        raise ValueError("N must be positive")
    if N == 1:
        rng = substream(site_seed)
        return np.array([math.sqrt(cov.table(1)[0]) * rng.standard_normal()])
    lam = _EIGS.get(cov, N)
    L = len(lam)
    rng = substream(site_seed)
    z = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    w = np.fft.fft(np.sqrt(lam / L) * z)
    return np.ascontiguousarray(w.real[:N])


# ---------------------------------------------------------------------------
# lazily realized field


class DisorderField:
    """Environment ``omega(n, k)`` for ``1 <= n <= N`` and integer sites ``k``.

    Site sequences are generated on first touch and cached; ``max_sites``
    bounds the cache (least recently used sites are evicted and regenerated
    identically if touched again).
    """

    def __init__(self, N: int, H: float, master_seed: int, cov: TemporalCovariance | None = None,
                 max_sites: int | None = None):
        self.N = int(N)
        self.H = float(H)
        self.master_seed = int(master_seed)
        self.cov = cov if cov is not None else TemporalCovariance(H)
        self.max_sites = max_sites
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._lock = threading.Lock()

    def site_seed(self, k: int) -> int:
        return mix(self.master_seed, int(k))

    def site(self, k: int) -> np.ndarray:
        k = int(k)
        seq = self._cache.get(k)
        if seq is not None:
            if self.max_sites is not None:
                with self._lock:
                    self._cache.move_to_end(k)
            return seq
        seq = generate_site_sequence(self.cov, self.N, self.site_seed(k))
        seq.flags.writeable = False
        with self._lock:
            seq = self._cache.setdefault(k, seq)
            if self.max_sites is not None:
                while len(self._cache) > self.max_sites:
                    self._cache.popitem(last=False)
        return seq

    def omega_at(self, n: int, k: int) -> float:
        if not (1 <= n <= self.N):
            raise IndexError(f"time index {n} outside 1..{self.N}")
        return float(self.site(k)[n - 1])

    def block(self, k_lo: int, k_hi: int) -> np.ndarray:
        """Array of shape ``(k_hi - k_lo + 1, N)`` with rows ``omega(., k)``."""
        return np.stack([self.site(k) for k in range(k_lo, k_hi + 1)])

    def along_paths(self, paths: np.ndarray) -> np.ndarray:
        """``omega(n, S_n)`` for each row ``S`` of ``paths`` (shape ``(M, N)``)."""
        paths = np.asarray(paths)
        sites, inv = np.unique(paths, return_inverse=True)
        blk = np.stack([self.site(k) for k in sites])
        cols = np.broadcast_to(np.arange(paths.shape[-1]), paths.shape)
        return blk[inv.reshape(paths.shape), cols]

    @property
    def n_sites(self) -> int:
        return len(self._cache)

    def memory_bytes(self) -> int:
        return sum(v.nbytes for v in self._cache.values())


def omega_at(field: DisorderField, n: int, k: int) -> float:
    return field.omega_at(n, k)


# ---------------------------------------------------------------------------
# binary dumps


def write_field_dump(path: str, field: DisorderField, k_lo: int, k_hi: int) -> None:
    """Write sites ``k_lo..k_hi`` as little-endian float64, site-major.

    The 16-byte header holds the magic, format version, ``N`` and ``H``
    (as float32).  The first site index is not part of the header; callers
    record it next to the file.
    """
    data = field.block(k_lo, k_hi).astype("<f8")
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(DUMP_MAGIC, DUMP_VERSION, field.N, field.H))
        fh.write(data.tobytes(order="C"))
    os.replace(tmp, path)


def read_field_dump(path: str):
    """Return ``(N, H, values)`` with ``values`` of shape ``(n_sites, N)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, N, H = _HEADER.unpack_from(raw)
    if magic != DUMP_MAGIC:
        raise ValueError(f"{path}: not a field dump")
    if version != DUMP_VERSION:
        raise ValueError(f"{path}: unsupported dump version {version}")
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return N, H, vals.reshape(-1, N)
