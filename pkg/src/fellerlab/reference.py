"""Reference marginal laws at a fixed time: closed forms for the reflected,
absorbed and exponential-holding cases, and fine-resolution simulation for
everything else.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from .boundary import FellerParams
from .brw import MeanEstimate, mean_ci, simulate
from .scaling import ScalingScheme, build_measure, start_state

CSV_SCHEMA = "fellerlab-cdf/1"


def _phi(z):
    return ndtr(z)


@dataclass(frozen=True, eq=False)
class MarginalLaw:
    """Law of ``B_t`` on ``[0, inf)`` plus the killed mass.

    ``cdf`` is the sub-probability distribution function of the live part;
    ``cdf_left`` gives left limits.  ``jump_points`` lists the discontinuities
    of ``cdf`` (empty for continuous laws other than the atom at 0).
    """

    cdf: Callable[[np.ndarray], np.ndarray]
    atom_at_zero: float
    kill_mass: float
    t: float
    x0: float
    name: str
    cdf_left: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jump_points: np.ndarray = np.empty(0)

    def left(self, y):
        if self.cdf_left is not None:
            return self.cdf_left(y)
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, self.cdf(y), 0.0)

    @property
    def live_mass(self) -> float:
        return 1.0 - self.kill_mass


def _check_time(t, x0):
    if not t > 0:
        raise ValueError("t must be > 0")
    if x0 < 0:
        raise ValueError("x0 must be >= 0")


def reflected_marginal(x0: float, t: float) -> MarginalLaw:
    """``|x0 + W_t|``: ``cdf(y) = Phi((y - x0)/sqrt t) - Phi((-y - x0)/sqrt t)``."""
    _check_time(t, x0)
    s = math.sqrt(t)

    def cdf(y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= 0, _phi((y - x0) / s) - _phi((-y - x0) / s), 0.0)

    return MarginalLaw(cdf, 0.0, 0.0, t, x0, "reflected")


def absorbed_marginal(x0: float, t: float, killed: bool = False) -> MarginalLaw:
    """Brownian motion stopped at 0 (reflection principle).

    With ``killed=True`` the mass stuck at 0 is relabelled as killed mass and
    the returned ``cdf`` covers only ``(0, inf)``.
    """
    _check_time(t, x0)
    s = math.sqrt(t)
    atom = 2.0 * float(_phi(-x0 / s))

    def cdf(y):
        y = np.asarray(y, dtype=float)
        full = 1.0 + _phi((y - x0) / s) - _phi((y + x0) / s)
        if killed:
            full = full - atom
        return np.where(y >= 0, full, 0.0)

    if killed:
        return MarginalLaw(cdf, 0.0, atom, t, x0, "killed")
    return MarginalLaw(cdf, atom, 0.0, t, x0, "absorbed")


def absorbed_density(x0: float, t: float):
    """Density of the absorbed law on ``(0, inf)``."""
    s = math.sqrt(t)
    c = 1.0 / (s * math.sqrt(2.0 * math.pi))

    def dens(y):
        y = np.asarray(y, dtype=float)
        return c * (np.exp(-0.5 * ((y - x0) / s) ** 2) - np.exp(-0.5 * ((y + x0) / s) ** 2))

    return dens


def exp_holding_survival(p1: float, p3: float, t: float) -> float:
    """Probability of being alive at ``t`` after starting at 0 with exponential holding."""
    if not (p1 > 0 and p3 > 0):
        raise ValueError("p1 and p3 must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    return math.exp(-p1 * t / p3)


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Live endpoint values (sorted, rescaled) plus killed and total counts."""

    values: np.ndarray
    killed: int
    total: int

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("sample is empty")
        if self.values.size + self.killed != self.total:
            raise ValueError("live + killed must equal total")

    @classmethod
    def from_values(cls, live, killed: int = 0) -> "EmpiricalSample":
        v = np.sort(np.asarray(live, dtype=float))
        return cls(v, int(killed), v.size + int(killed))

    @property
    def kill_fraction(self) -> float:
        return self.killed / self.total

    @property
    def zero_fraction(self) -> float:
        return int(np.searchsorted(self.values, 0.0, side="right")) / self.total

    def cdf(self, y):
        return np.searchsorted(self.values, np.asarray(y, dtype=float), side="right") / self.total

    def cdf_left(self, y):
        return np.searchsorted(self.values, np.asarray(y, dtype=float), side="left") / self.total

    def as_law(self, t: float, x0: float, name: str = "empirical") -> MarginalLaw:
        return MarginalLaw(self.cdf, self.zero_fraction, self.kill_fraction, t, x0, name,
                           self.cdf_left, np.unique(self.values))


@dataclass(frozen=True, eq=False)
class FineGridReference:
    law: MarginalLaw
    sample: EmpiricalSample
    occupation: MeanEstimate  # time at 0 in rescaled units, visits / n_ref^2
    n_ref: int
    paths: int
    seed: int


def endpoint_sample(params: FellerParams, regime: str, x0: float, t: float, n: int,
                    paths: int, seed: int):
    """Simulate ``floor(n^2 t)`` steps from ``floor(n x0)``; returns the rescaled sample and ensemble."""
    measure = build_measure(ScalingScheme(regime, n, params))
    steps = math.floor(n * n * t)
    ens = simulate(measure, start_state(x0, n), steps, paths, seed)
    alive = ens.killed_at < 0
    sample = EmpiricalSample.from_values(ens.final[alive] / n, int((~alive).sum()))
    return sample, ens


def fine_grid_reference(params: FellerParams, regime: str, x0: float, t: float, n_ref: int,
                        paths: int, seed: int, largest_n: Optional[int] = None) -> FineGridReference:
    """Empirical law of the walk at resolution ``n_ref``; a stand-in where no closed form exists."""
    if largest_n is not None and n_ref < 4 * largest_n:
        raise ValueError(f"n_ref={n_ref} must be at least 4x the largest tested n ({largest_n})")
    sample, ens = endpoint_sample(params, regime, x0, t, n_ref, paths, seed)
    occ = mean_ci(ens.visits_to_zero / float(n_ref * n_ref))
    return FineGridReference(sample.as_law(t, x0, f"fine_grid(n={n_ref})"), sample, occ,
                             n_ref, paths, seed)


def export_cdf_csv(law: MarginalLaw, grid, path, header_comment: Optional[str] = None) -> None:
    """Write ``y,cdf`` rows on ``grid``; the first line names the schema version."""
    grid = np.asarray(grid, dtype=float)
    vals = law.cdf(grid)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_SCHEMA} law={law.name} t={law.t!r} x0={law.x0!r} kill_mass={law.kill_mass!r}\n")
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "cdf"])
        for y, v in zip(grid.tolist(), np.asarray(vals, dtype=float).tolist()):
            w.writerow([repr(y), repr(v)])
