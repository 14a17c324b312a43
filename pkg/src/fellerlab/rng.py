"""Counter-based random bits for path-parallel simulation.

Every random quantity used by the simulator is a pure function of
``(seed, path_id, counter)``.  Path ``k`` of an ensemble therefore does not
depend on how many paths are simulated alongside it, in which order, or on
how many worker threads are used.

The mixing function is the SplitMix64 finalizer (Steele, Lea & Flood 2014).
Two disjoint counter streams are carved out of each path key: even counters
feed 64-step blocks of +/-1 bits for interior moves, odd counters feed one
53-bit uniform per boundary visit.
"""

import numpy as np
from numba import njit

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_PATH_SALT = 0xD1B54A32D192ED03


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a Python int (reference implementation)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def path_key(seed: int, path_id: int) -> int:
    seed, path_id = int(seed), int(path_id)
    return mix64((seed & MASK64) ^ mix64((path_id * _PATH_SALT + GOLDEN) & MASK64))


def step_bits(key: int, block: int) -> int:
    """64 interior step bits for steps ``64*block .. 64*block+63``."""
    return mix64((key + GOLDEN * (2 * block)) & MASK64)


def step_uniform(key: int, step: int) -> float:
    """Uniform in [0, 1) used when the walk sits at 0 at ``step``."""
    return (mix64((key + GOLDEN * (2 * step + 1)) & MASK64) >> 11) * 2.0**-53


# numba versions; uint64 arithmetic wraps modulo 2**64.

@njit(cache=True, inline="always")
def _mix64(x):
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _path_key(seed, path_id):
    inner = _mix64(np.uint64(path_id) * np.uint64(_PATH_SALT) + np.uint64(GOLDEN))
    return _mix64(seed ^ inner)


@njit(cache=True, inline="always")
def _step_bits(key, block):
    return _mix64(key + np.uint64(GOLDEN) * (np.uint64(2) * np.uint64(block)))


@njit(cache=True, inline="always")
def _step_uniform(key, step):
    h = _mix64(key + np.uint64(GOLDEN) * (np.uint64(2) * np.uint64(step) + np.uint64(1)))
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


def seed_to_uint64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & MASK64)
