"""Counter-based random number streams.

Every ensemble member gets its own stream, derived by hashing
(master_seed, path_index) with SplitMix64.  Output ``i`` of a stream is a
pure function of the stream base and the counter ``i``, so streams can be
generated vectorized (here), scalar inside compiled kernels
(``_kernels.py``), in any order, or in parallel, always with identical
results.

Stream definition (all arithmetic mod 2^64):

* ``base      = mix64(master_seed + GOLDEN * (path_index + 1))``
* ``uniform(k) = (mix64(base + GOLDEN * (k + 1)) >> 11) / 2^53``  in [0, 1)
* normals come from Box-Muller pairs: pair ``m`` uses uniforms at counters
  ``4m`` and ``4m + 1``; ``normal(2m) = r cos(theta)``,
  ``normal(2m+1) = r sin(theta)`` with ``r = sqrt(-2 log(1 - u0))`` and
  ``theta = 2 pi u1``.
"""

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


def mix64(x: int) -> int:
    """SplitMix64 finalizer of a 64-bit integer."""
    x &= _MASK
    x ^= x >> 30
    x = (x * _MIX1) & _MASK
    x ^= x >> 27
    x = (x * _MIX2) & _MASK
    x ^= x >> 31
    return x


def stream_seed(master_seed: int, path_index: int) -> int:
    """Derive the stream base for one ensemble member."""
    return mix64((master_seed + GOLDEN * (path_index + 1)) & _MASK)


def seed_u64(seed: int) -> np.uint64:
    """Reduce an arbitrary Python integer seed to the uint64 used by kernels."""
    return np.uint64(seed & _MASK)


def _mix64_vec(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MIX1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MIX2)
    x ^= x >> np.uint64(31)
    return x


def uniforms(base: int, count: int, start: int = 0) -> np.ndarray:
    """Uniform [0,1) variates at counters start..start+count-1."""
    k = np.arange(start, start + count, dtype=np.uint64)
    state = np.uint64(base) + np.uint64(GOLDEN) * (k + np.uint64(1))
    return (_mix64_vec(state) >> np.uint64(11)).astype(np.float64) * _INV53


def normals(base: int, count: int) -> np.ndarray:
    """Standard normal variates 0..count-1 of the stream.

    Delegates to the compiled kernel so every consumer (vectorized or
    inside compiled Monte-Carlo loops) draws bit-identical values.
    """
    from . import _kernels

    out = np.empty(count)
    _kernels.fill_normals(np.uint64(base & _MASK), out)
    return out
