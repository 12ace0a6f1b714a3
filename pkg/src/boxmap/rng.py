"""Counter-based deterministic sampling.

Every Monte Carlo routine draws sample i of a named stream by hashing
(seed, stream, i), so results are independent of evaluation order and
worker count.  The mixer is the standard splitmix64 finalizer.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(x):
    with np.errstate(over="ignore"):
        x = (x + _GOLDEN) & _MASK
        x ^= x >> np.uint64(30)
        x = (x * _M1) & _MASK
        x ^= x >> np.uint64(27)
        x = (x * _M2) & _MASK
        x ^= x >> np.uint64(31)
    return x


def _stream_key(seed, stream):
    h = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    for ch in stream.encode():
        h = _mix(h ^ np.uint64(ch))
    return h


def uniform(seed, stream, n, lo=0.0, hi=1.0):
    """n doubles in [lo, hi), sample i depending only on (seed, stream, i)."""
    key = _stream_key(seed, stream)
    idx = np.arange(n, dtype=np.uint64)
    bits = _mix(key ^ _mix(idx))
    u = (bits >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return lo + (hi - lo) * u


def complex_rect(seed, stream, n, re_lo, re_hi, im_lo, im_hi):
    """n complex samples uniform on a rectangle."""
    re = uniform(seed, stream + "/re", n, re_lo, re_hi)
    im = uniform(seed, stream + "/im", n, im_lo, im_hi)
    return re + 1j * im


def complex_disk(seed, stream, n, center=0j, radius=1.0):
    """n complex samples uniform on a disk (area measure)."""
    r = radius * np.sqrt(uniform(seed, stream + "/r", n))
    t = uniform(seed, stream + "/t", n, 0.0, 2.0 * np.pi)
    return center + r * np.exp(1j * t)


def integers(seed, stream, n, lo, hi):
    """n integers uniform on [lo, hi)."""
    u = uniform(seed, stream, n)
    return lo + np.minimum((u * (hi - lo)).astype(np.int64), hi - lo - 1)
