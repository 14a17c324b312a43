"""Compiled inner loop of the boundary random walk simulator.

Internal state encoding: integer states >= 0, killed = -1.  The public
types never expose the -1; paths are truncated at the killing time and
rescaled values use the ``DELTA`` marker.
"""

import os

import numba
import numpy as np
from numba import njit, prange

from .rng import _path_key, _step_bits, _step_uniform

# Prefer OpenMP/workqueue: older TBB builds make numba warn on every launch.
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ and "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

KILLED = -1
CHUNK = 256


@njit(cache=True, inline="always")
def _search(cdf, u):
    # first index with cdf[idx] > u
    lo = 0
    hi = cdf.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(cache=True, parallel=True)
def simulate_kernel(seed, first_path, count, start, steps, cdf,
                    record_full, full_out, snap_steps, snap_out,
                    final_out, killed_out, visits_out, hist_out):
    """Advance ``count`` independent walks.

    ``cdf`` is cumulative over outcomes ``(kill, 0, 1, ..., J)``.
    ``hist_out[c, o]`` counts boundary outcomes ``o`` of chunk ``c``.
    ``snap_steps`` must be sorted; ``snap_out[p, s]`` receives X at that step.
    """
    n_chunks = (count + CHUNK - 1) // CHUNK
    n_snap = snap_steps.shape[0]
    for c in prange(n_chunks):
        lo = c * CHUNK
        hi = min(count, lo + CHUNK)
        for p in range(lo, hi):
            key = _path_key(seed, first_path + p)
            state = start
            visits = 0
            killed = -1
            si = 0
            next_snap = snap_steps[0] if n_snap > 0 else steps + 1
            k = 0
            while k < steps:
                word = _step_bits(key, k >> 6)
                blk_end = min(steps, (k | 63) + 1)
                # fast path: a whole aligned block that cannot reach 0
                if (not record_full and state > 64 and (k & 63) == 0
                        and blk_end == k + 64 and next_snap >= blk_end):
                    state += 2 * _popcount(word) - 64
                    k = blk_end
                    continue
                while k < blk_end:
                    if record_full:
                        full_out[p, k] = state
                    while k == next_snap:
                        snap_out[p, si] = state
                        si += 1
                        next_snap = snap_steps[si] if si < n_snap else steps + 1
                    if state == 0:
                        visits += 1
                        o = _search(cdf, _step_uniform(key, k))
                        hist_out[c, o] += 1
                        if o == 0:
                            killed = k + 1
                            state = KILLED
                            break
                        state = o - 1
                    else:
                        state += 2 * np.int64((word >> np.uint64(k & 63)) & np.uint64(1)) - 1
                    k += 1
                if killed >= 0:
                    break
            if killed < 0:
                if record_full:
                    full_out[p, steps] = state
                while si < n_snap and snap_steps[si] == steps:
                    snap_out[p, si] = state
                    si += 1
            else:
                if record_full:
                    for kk in range(killed, steps + 1):
                        full_out[p, kk] = KILLED
            while si < n_snap:
                snap_out[p, si] = KILLED
                si += 1
            final_out[p] = state
            killed_out[p] = killed
            visits_out[p] = visits
