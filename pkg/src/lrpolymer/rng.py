"""Counter-based random substreams.

Every random quantity in the package is drawn from a stream addressed by a
tuple of integer keys, e.g. ``(seed, field_index, block_index)``.  The keys
are folded into a 128-bit Philox key with a splitmix64 mixer, so a stream's
contents depend only on its address and never on scheduling order.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the splitmix64 finalizer on a 64-bit word."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _word(k: int) -> int:
    # zigzag so that negative site indices map to distinct words
    k = int(k)
    return ((k << 1) ^ (k >> 63)) & _MASK if k < 0 else (k << 1) & _MASK


def mix(*keys: int) -> int:
    """Fold an arbitrary tuple of integers into one 64-bit word."""
    h = 0x243F6A8885A308D3
    for k in keys:
        h = splitmix64(h ^ _word(k))
    return h


def substream(*keys: int) -> np.random.Generator:
    """Return an independent generator addressed by ``keys``."""
    lo = mix(*keys)
    hi = splitmix64(lo ^ 0xD1B54A32D192ED03)
    return np.random.Generator(np.random.Philox(key=np.array([lo, hi], dtype=np.uint64)))


# stable string tags for key tuples
TAG_FIELD = 0x46494C44
TAG_PATHS = 0x50415448
TAG_PAIRS = 0x50414952
TAG_SILT = 0x53494C54
TAG_MC = 0x4D43
