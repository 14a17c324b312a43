"""Boundary random walk: simple symmetric walk on {0, 1, 2, ...} with a
jumping measure at 0 and a cemetery state.

From ``i >= 1`` the walk moves to ``i - 1`` or ``i + 1`` with probability 1/2.
From 0 it jumps to ``j`` with probability ``probs[j]`` or is killed with
probability ``kill``.  Killed paths are truncated; every function is
extended by ``f(cemetery) = 0``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numba
import numpy as np

from . import _kernel
from .errors import BudgetExceeded
from .rng import seed_to_uint64

DELTA = "Δ"  # cemetery marker in public outputs
MASS_TOL = 1e-12
FIRST_PASSAGE_MAX_STEPS = 24
ENUM_MAX_LEAVES = 10**7
ENUM_MAX_DEPTH = 14


@dataclass(frozen=True, eq=False)
class JumpingMeasure:
    """Boundary law ``(kill, p_0, ..., p_J)``; entries beyond ``J`` are zero."""

    probs: np.ndarray
    kill: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).copy()
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a nonempty vector")
        # strip trailing zeros so J is the true support bound
        nz = np.flatnonzero(probs)
        probs = probs[: (nz[-1] + 1 if nz.size else 1)]
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if (probs < 0).any() or self.kill < 0:
            raise ValueError("jumping measure entries must be >= 0")
        total = math.fsum(probs) + self.kill
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"jumping measure must sum to 1, got {total!r}")

    @classmethod
    def from_dict(cls, entries: dict, kill: float = 0.0) -> "JumpingMeasure":
        top = max(entries) if entries else 0
        probs = np.zeros(top + 1)
        for j, p in entries.items():
            probs[j] = p
        return cls(probs, kill)

    @property
    def J(self) -> int:
        return self.probs.size - 1

    def p(self, j: int) -> float:
        return float(self.probs[j]) if 0 <= j <= self.J else 0.0

    def cdf(self) -> np.ndarray:
        """Cumulative law over outcomes ``(kill, 0, 1, ..., J)`` ending at exactly 1."""
        w = np.concatenate(([self.kill], self.probs))
        cdf = np.cumsum(w)
        last = np.flatnonzero(w)[-1]
        cdf[last:] = 1.0
        return cdf

    def __eq__(self, other):
        if not isinstance(other, JumpingMeasure):
            return NotImplemented
        return self.kill == other.kill and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.kill, self.probs.tobytes()))

    def __repr__(self):
        nz = {int(j): float(self.probs[j]) for j in np.flatnonzero(self.probs)}
        return f"JumpingMeasure(kill={self.kill!r}, {nz})"


def step_law(measure: JumpingMeasure, state: int) -> dict:
    """One-step transition law from ``state``; the cemetery key is ``DELTA``."""
    if state < 0:
        raise ValueError("state must be >= 0")
    if state >= 1:
        return {state - 1: 0.5, state + 1: 0.5}
    law = {}
    if measure.kill > 0:
        law[DELTA] = measure.kill
    for j in np.flatnonzero(measure.probs):
        law[int(j)] = float(measure.probs[j])
    return law


@dataclass(frozen=True)
class BRWPath:
    states: tuple
    start: int
    killed_at: Optional[int] = None

    def __len__(self):
        return len(self.states)


def worker_count() -> int:
    cap = os.environ.get("FELLERLAB_THREADS")
    n = numba.config.NUMBA_NUM_THREADS
    if cap:
        n = max(1, min(n, int(cap)))
    return n


@dataclass(eq=False)
class PathEnsemble:
    """Seeded batch of walks.

    Per-path summaries are always present.  ``full`` holds the whole state
    matrix (killed entries = -1) when requested; ``snapshots`` holds the
    states at ``snapshot_steps``.  ``boundary_counts[o]`` aggregates boundary
    outcomes over the ensemble: ``o = 0`` is killing, ``o = 1 + j`` a move to ``j``.
    """

    measure: JumpingMeasure
    seed: int
    start: int
    steps: int
    final: np.ndarray
    killed_at: np.ndarray
    visits_to_zero: np.ndarray
    boundary_counts: np.ndarray
    snapshot_steps: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    snapshots: Optional[np.ndarray] = None
    full: Optional[np.ndarray] = None

    @property
    def count(self) -> int:
        return self.final.size

    @property
    def killed(self) -> np.ndarray:
        return self.killed_at >= 0

    def path(self, k: int) -> BRWPath:
        if self.full is None:
            raise ValueError("ensemble was simulated without full paths")
        row = self.full[k]
        ka = int(self.killed_at[k])
        end = ka if ka >= 0 else self.steps + 1
        return BRWPath(tuple(int(s) for s in row[:end]), self.start, ka if ka >= 0 else None)

    @property
    def paths(self) -> list:
        return [self.path(k) for k in range(self.count)]

    def snapshot(self, step: int) -> np.ndarray:
        """States at ``step`` (killed = -1)."""
        if self.full is not None:
            return self.full[:, step]
        hit = np.flatnonzero(self.snapshot_steps == step)
        if hit.size == 0:
            raise ValueError(f"step {step} was not recorded")
        return self.snapshots[:, hit[0]]

    def departures(self) -> np.ndarray:
        """Aggregate counts of boundary moves 0 -> j for j = 0..J."""
        return self.boundary_counts[1:]


def simulate(measure: JumpingMeasure, start: int, steps: int, count: int, seed: int,
             record: str = "summary", snapshot_steps: Sequence[int] = (),
             first_path: int = 0) -> PathEnsemble:
    """Simulate ``count`` independent walks of ``steps`` steps.

    Path ``k`` is a pure function of ``(seed, first_path + k, measure, start)``.
    ``record`` is ``"summary"`` or ``"full"``.
    """
    if steps < 0 or count < 1 or start < 0:
        raise ValueError("need steps >= 0, count >= 1, start >= 0")
    if record not in ("summary", "full"):
        raise ValueError("record must be 'summary' or 'full'")
    snaps = np.unique(np.asarray(snapshot_steps, dtype=np.int64))
    if snaps.size and (snaps[0] < 0 or snaps[-1] > steps):
        raise ValueError("snapshot steps must lie in [0, steps]")
    full_rec = record == "full"
    full = np.zeros((count, steps + 1) if full_rec else (1, 1), dtype=np.int64)
    snap_out = np.zeros((count, max(snaps.size, 1)), dtype=np.int64)
    final = np.zeros(count, dtype=np.int64)
    killed = np.zeros(count, dtype=np.int64)
    visits = np.zeros(count, dtype=np.int64)
    cdf = measure.cdf()
    n_chunks = (count + _kernel.CHUNK - 1) // _kernel.CHUNK
    hist = np.zeros((n_chunks, cdf.size), dtype=np.int64)
    prev = numba.get_num_threads()
    numba.set_num_threads(worker_count())
    try:
        _kernel.simulate_kernel(seed_to_uint64(seed), int(first_path), count, int(start), int(steps),
                                cdf, full_rec, full, snaps, snap_out, final, killed, visits, hist)
    finally:
        numba.set_num_threads(prev)
    return PathEnsemble(
        measure=measure, seed=seed, start=start, steps=steps,
        final=final, killed_at=killed, visits_to_zero=visits,
        boundary_counts=hist.sum(axis=0),
        snapshot_steps=snaps, snapshots=snap_out[:, : snaps.size],
        full=full if full_rec else None,
    )


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    halfwidth: float  # 95% normal-approximation half-width
    n: int


def mean_ci(values: np.ndarray) -> MeanEstimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    sd = values.std(ddof=1) if n > 1 else 0.0
    return MeanEstimate(float(values.mean()), float(1.959963984540054 * sd / math.sqrt(n)), n)


def occupation_count(ensemble: PathEnsemble, m: int) -> MeanEstimate:
    """Mean number of visits to 0 among ``X_0 .. X_{m-1}`` with a 95% CI."""
    if m > ensemble.steps:
        raise ValueError("horizon exceeds simulated steps")
    if ensemble.full is not None:
        visits = (ensemble.full[:, :m] == 0).sum(axis=1)
    elif m == ensemble.steps:
        visits = ensemble.visits_to_zero
    else:
        raise ValueError("summary ensembles only support m == steps; simulate with record='full'")
    return mean_ci(visits)


def first_passage_time(i: int, j: int) -> float:
    """``P_i(tau = j)`` for simple random walk, by enumerating all 2^j step sequences."""
    if i < 1:
        raise ValueError("i must be >= 1")
    if j > FIRST_PASSAGE_MAX_STEPS:
        raise BudgetExceeded(f"first-passage enumeration limited to j <= {FIRST_PASSAGE_MAX_STEPS}")
    if j < i or (j - i) % 2:
        return 0.0
    hits = 0
    block = 1 << min(j, 18)
    codes_all = 1 << j
    shifts = np.arange(j, dtype=np.int64)
    for base in range(0, codes_all, block):
        codes = np.arange(base, base + block, dtype=np.int64)
        steps = ((codes[:, None] >> shifts) & 1) * 2 - 1
        pos = i + np.cumsum(steps, axis=1)
        early = (pos[:, :-1] <= 0).any(axis=1) if j > 1 else np.zeros(codes.size, bool)
        hits += int(np.count_nonzero((pos[:, -1] == 0) & ~early))
    return hits / codes_all


@lru_cache(maxsize=None)
def _leaf_count(measure: JumpingMeasure, state: int, depth: int) -> int:
    if depth == 0 or state < 0:
        return 1
    if state >= 1:
        return _leaf_count(measure, state - 1, depth - 1) + _leaf_count(measure, state + 1, depth - 1)
    total = 1 if measure.kill > 0 else 0
    for j in np.flatnonzero(measure.probs):
        total += _leaf_count(measure, int(j), depth - 1)
    return total


def leaf_count(measure: JumpingMeasure, start: int, depth: int) -> int:
    """Number of leaves of the probability tree (killed branches are leaves)."""
    return _leaf_count(measure, start, depth)


def enumerate_exact(measure: JumpingMeasure, start: int, depth: int,
                    functional: Callable[[np.ndarray], np.ndarray],
                    chunk: int = 1 << 18) -> float:
    """Exact expectation of a path functional by full tree expansion.

    ``functional`` receives an integer array of shape ``(leaves, depth + 1)``
    holding ``X_0 .. X_depth`` (killed entries = -1) and returns one value per
    row.  Leaf probabilities are products of the transition probabilities;
    the final sum is compensated.
    """
    if depth > ENUM_MAX_DEPTH:
        raise BudgetExceeded(f"depth {depth} > {ENUM_MAX_DEPTH}")
    leaves = leaf_count(measure, start, depth)
    if leaves > ENUM_MAX_LEAVES:
        raise BudgetExceeded(f"tree has {leaves} leaves > {ENUM_MAX_LEAVES}")
    support = np.flatnonzero(measure.probs)
    outcomes = [(-1, measure.kill)] if measure.kill > 0 else []
    outcomes += [(int(j), float(measure.probs[j])) for j in support]
    terms: list[float] = []

    def expand(paths, probs, level):
        if level == depth:
            vals = np.asarray(functional(paths), dtype=float)
            terms.extend((probs * vals).tolist())
            return
        cur = paths[:, level]
        kids_p, kids_w = [], []
        dead = cur < 0
        if dead.any():
            kids_p.append(np.column_stack([paths[dead], np.full(dead.sum(), -1)]))
            kids_w.append(probs[dead])
        inner = cur > 0
        if inner.any():
            for d in (-1, 1):
                kids_p.append(np.column_stack([paths[inner], cur[inner] + d]))
                kids_w.append(probs[inner] * 0.5)
        zero = cur == 0
        if zero.any():
            for j, w in outcomes:
                kids_p.append(np.column_stack([paths[zero], np.full(zero.sum(), j)]))
                kids_w.append(probs[zero] * w)
        paths = np.concatenate(kids_p)
        probs = np.concatenate(kids_w)
        if paths.shape[0] > chunk:
            for lo in range(0, paths.shape[0], chunk):
                expand(paths[lo:lo + chunk], probs[lo:lo + chunk], level + 1)
        else:
            expand(paths, probs, level + 1)

    expand(np.array([[start]], dtype=np.int64), np.array([1.0]), 0)
    return math.fsum(terms)
