"""Convergence experiments: simulate the rescaled walk, compare its marginal
law at fixed times with a reference law, and collect killing and
occupation diagnostics.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .boundary import FellerParams
from .brw import MeanEstimate, mean_ci, simulate
from .genfun import occupation_bound
from .reference import (
    EmpiricalSample, MarginalLaw, absorbed_marginal, endpoint_sample, fine_grid_reference,
    reflected_marginal,
)
from .scaling import ScalingScheme, build_measure_auto, infer_regime, preset as make_preset, start_state

STATISTICS = ("ks", "cvm", "mean_abs")
KS_95 = 1.3580986393225505  # 95% quantile of the Kolmogorov distribution
CONVERGENCE_SCHEMA = "fellerlab-convergence/1"
OCCUPATION_SCHEMA = "fellerlab-occupation/1"


# ---------------------------------------------------------------- statistics

@dataclass(frozen=True)
class KSResult:
    statistic: float
    kill_difference: float


def _probe_points(sample: EmpiricalSample, law: MarginalLaw) -> np.ndarray:
    pts = np.concatenate([np.unique(sample.values), np.asarray(law.jump_points, dtype=float), [0.0]])
    return np.unique(pts)


def ks_statistic(sample: EmpiricalSample, law: MarginalLaw) -> KSResult:
    """Sup distance between the empirical and reference sub-distribution functions.

    Both right values and left limits are compared at every jump of either
    function, and the limit at infinity (live mass) is included.  The kill
    fractions are also compared on their own.
    """
    pts = _probe_points(sample, law)
    right = np.abs(sample.cdf(pts) - law.cdf(pts))
    left = np.abs(sample.cdf_left(pts) - law.left(pts))
    tail = abs((1.0 - sample.kill_fraction) - law.live_mass)
    stat = max(float(right.max()), float(left.max()), tail)
    return KSResult(stat, abs(sample.kill_fraction - law.kill_mass))


def cvm_statistic(sample: EmpiricalSample, law: MarginalLaw) -> float:
    """Cramer-von Mises distance ``T / N`` with the cemetery placed above every real."""
    N = sample.total
    F = np.concatenate([law.cdf(sample.values), np.ones(sample.killed)])
    F = np.sort(F)
    i = np.arange(1, N + 1)
    return float((np.sum((F - (2 * i - 1) / (2 * N)) ** 2) + 1.0 / (12 * N)) / N)


def live_mean(law: MarginalLaw) -> float:
    """``E[B_t; alive]`` of a reference law."""
    if law.jump_points.size:
        pts = np.asarray(law.jump_points)
        w = np.diff(np.concatenate([[0.0], law.cdf(pts)]))
        return float(np.sum(pts * w))
    val, _ = quad(lambda y: law.live_mass - float(law.cdf(y)), 0.0, np.inf, epsabs=1e-12, limit=200)
    return val


def mean_abs_statistic(sample: EmpiricalSample, law: MarginalLaw) -> tuple[float, float]:
    """``|E_emp[B_t; alive] - E_law[B_t; alive]|`` and the 95% Monte Carlo half-width."""
    full = np.concatenate([sample.values, np.zeros(sample.killed)])
    est = mean_ci(full)
    return abs(est.mean - live_mean(law)), est.halfwidth


def positive_part(sample: EmpiricalSample) -> EmpiricalSample:
    """Relabel the values at 0 as killed, leaving the law on ``(0, inf)``."""
    zeros = int(np.searchsorted(sample.values, 0.0, side="right"))
    return EmpiricalSample(sample.values[zeros:], sample.killed + zeros, sample.total)


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class Thresholds:
    final_statistic: float = 0.03
    require_decrease: bool = True
    kill_tolerance: float = 0.02
    atom_tolerance: float = 0.02


@dataclass(frozen=True)
class ExperimentConfig:
    """One convergence experiment.  Either ``preset`` or ``params`` is given."""

    x0: float
    t_list: tuple
    n_list: tuple
    paths: int
    seed: int
    preset: Optional[str] = None
    params: Optional[FellerParams] = None
    regime: str = "auto"
    statistic: str = "ks"
    output: Optional[str] = None
    thresholds: Thresholds = field(default_factory=Thresholds)
    auto_bump: bool = True
    n_ref: Optional[int] = None
    ref_paths: Optional[int] = None

    def __post_init__(self):
        if (self.preset is None) == (self.params is None):
            raise ValueError("give exactly one of preset or params")
        n = list(self.n_list)
        if not n or any(b <= a for a, b in zip(n, n[1:])):
            raise ValueError("n_list must be nonempty and strictly increasing")
        if self.paths < 100:
            raise ValueError("paths must be >= 100")
        if self.statistic not in STATISTICS:
            raise ValueError(f"statistic must be one of {STATISTICS}")
        if not self.t_list or any(t <= 0 for t in self.t_list):
            raise ValueError("t_list must hold positive times")
        if self.x0 < 0:
            raise ValueError("x0 must be >= 0")

    def resolved(self) -> tuple[FellerParams, str]:
        if self.preset is not None:
            p = make_preset(self.preset)
            params, regime = p.params, p.regime
        else:
            params, regime = self.params, infer_regime(self.params)
        if self.regime != "auto":
            regime = self.regime
        return params, regime


# ---------------------------------------------------------------- references

def closed_form_reference(params: FellerParams, x0: float, t: float) -> Optional[MarginalLaw]:
    """Closed-form law when the parameters describe a reflected, absorbed or
    exponential-holding (started at 0) motion; ``None`` otherwise."""
    if not params.p4.is_zero:
        return None
    p1, p2, p3 = params.p1, params.p2, params.p3
    if p1 == 0 and p3 == 0 and p2 > 0:
        return reflected_marginal(x0, t)
    if p1 == 0 and p2 == 0 and p3 > 0:
        return absorbed_marginal(x0, t)
    if p2 == 0 and p1 > 0 and p3 > 0 and x0 == 0:
        alive = math.exp(-p1 * t / p3)
        cdf = lambda y: np.where(np.asarray(y, dtype=float) >= 0, alive, 0.0)  # noqa: E731
        return MarginalLaw(cdf, alive, 1.0 - alive, t, x0, "exp_holding")
    return None


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    t: float
    statistic_value: float
    mc_halfwidth: float
    reference_name: str
    kill_empirical: float
    kill_reference: float
    atom_empirical: float
    atom_reference: float
    occupation: float
    occupation_halfwidth: float


ROW_FIELDS = tuple(ConvergenceRow.__dataclass_fields__)


@dataclass
class ConvergenceReport:
    statistic: str
    rows: list
    thresholds: Thresholds
    bumped: dict = field(default_factory=dict)  # requested n -> n actually used

    def series(self, t: float) -> list:
        return [r for r in self.rows if r.t == t]

    @property
    def verdict(self) -> dict:
        out = {}
        for t in sorted({r.t for r in self.rows}):
            rs = self.series(t)
            vals = [r.statistic_value for r in rs]
            out[f"t={t!r}:final_statistic"] = vals[-1] <= self.thresholds.final_statistic
            if self.thresholds.require_decrease and len(vals) > 1:
                out[f"t={t!r}:decrease"] = vals[-1] < vals[0]
            last = rs[-1]
            out[f"t={t!r}:kill"] = abs(last.kill_empirical - last.kill_reference) <= self.thresholds.kill_tolerance
            out[f"t={t!r}:atom"] = abs(last.atom_empirical - last.atom_reference) <= self.thresholds.atom_tolerance
        return out

    @property
    def passed(self) -> bool:
        return all(self.verdict.values())

    def to_csv(self, reproducible: bool = True) -> str:
        return _csv_text(CONVERGENCE_SCHEMA, ROW_FIELDS,
                         [[getattr(r, f) for f in ROW_FIELDS] for r in self.rows], reproducible)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(schema, header, rows, reproducible) -> str:
    buf = io.StringIO()
    first = f"# {schema}"
    if not reproducible:
        first += f" created={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}"
    buf.write(first + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _compare(statistic, sample, law, fine_paths):
    """Statistic and a 95% Monte Carlo scale for it."""
    if statistic == "ks":
        scale = KS_95 * math.sqrt(1.0 / sample.total + (1.0 / fine_paths if fine_paths else 0.0))
        return ks_statistic(sample, law).statistic, scale
    if statistic == "cvm":
        return cvm_statistic(sample, law), float("nan")
    return mean_abs_statistic(sample, law)


def run_convergence(config: ExperimentConfig) -> ConvergenceReport:
    """Marginal-law distance between ``B^(n)_t`` and a reference for every ``(n, t)``."""
    params, regime = config.resolved()
    largest = max(config.n_list)
    refs = {}
    for t in config.t_list:
        law = closed_form_reference(params, config.x0, t)
        if law is None:
            n_ref = config.n_ref or 4 * largest
            fine = fine_grid_reference(params, regime, config.x0, t, n_ref,
                                       config.ref_paths or config.paths, config.seed + 1, largest)
            refs[t] = (fine.law, fine.paths)
        else:
            refs[t] = (law, 0)
    rows, bumped = [], {}
    for n in config.n_list:
        scheme = ScalingScheme(regime, n, params)
        if config.auto_bump:
            _, n_used = build_measure_auto(scheme)
        else:
            n_used = n
        if n_used != n:
            bumped[n] = n_used
        for t in config.t_list:
            sample, ens = endpoint_sample(params, regime, config.x0, t, n_used, config.paths, config.seed)
            law, fine_paths = refs[t]
            value, hw = _compare(config.statistic, sample, law, fine_paths)
            occ = mean_ci(ens.visits_to_zero / float(n_used * n_used))
            rows.append(ConvergenceRow(n_used, float(t), float(value), float(hw), law.name,
                                       sample.kill_fraction, float(law.kill_mass),
                                       sample.zero_fraction, float(law.atom_at_zero),
                                       occ.mean, occ.halfwidth))
    return ConvergenceReport(config.statistic, rows, config.thresholds, bumped)


# ---------------------------------------------------------------- occupation

@dataclass(frozen=True)
class OccupationRow:
    n: int
    steps: int
    mean_visits: float
    visits_halfwidth: float
    bound: float  # nan when the walk can hold at 0
    rescaled_occupation: float
    rescaled_halfwidth: float


OCCUPATION_FIELDS = tuple(OccupationRow.__dataclass_fields__)


def occupation_scaling(preset_name: str, n_list: Sequence[int], t: float, paths: int, seed: int,
                       x0: float = 0.0) -> list[OccupationRow]:
    """Expected visits to 0 in ``floor(n^2 t)`` steps, against the bound when ``p_0 = 0``."""
    p = make_preset(preset_name)
    rows = []
    for n in n_list:
        measure, n_used = build_measure_auto(p.scheme(n))
        steps = math.floor(n_used * n_used * t)
        ens = simulate(measure, start_state(x0, n_used), steps, paths, seed)
        v = mean_ci(ens.visits_to_zero)
        bound = occupation_bound(steps) if measure.p(0) == 0 and steps >= 1 else float("nan")
        scale = float(n_used * n_used)
        rows.append(OccupationRow(n_used, steps, v.mean, v.halfwidth, bound,
                                  v.mean / scale, v.halfwidth / scale))
    return rows


def occupation_csv(rows, reproducible: bool = True) -> str:
    return _csv_text(OCCUPATION_SCHEMA, OCCUPATION_FIELDS,
                     [[getattr(r, f) for f in OCCUPATION_FIELDS] for r in rows], reproducible)


# ---------------------------------------------------------------- departures

@dataclass(frozen=True)
class DepartureCheck:
    departures: int
    in_window: int
    observed: float
    expected: float
    sigma: float

    @property
    def z(self) -> float:
        return (self.observed - self.expected) / self.sigma if self.sigma > 0 else 0.0

    @property
    def within_3sigma(self) -> bool:
        return abs(self.observed - self.expected) <= 3.0 * self.sigma


def departure_window_check(params: FellerParams, regime: str, n: int, x0: float, t: float,
                           paths: int, seed: int, window: tuple = (1.8, 2.2)) -> DepartureCheck:
    """Fraction of boundary departures (moves from 0 to ``j >= 1`` or to the
    cemetery) whose rescaled target ``j/n`` lies in ``window``, against the
    fraction implied by the jumping measure."""
    measure, n = build_measure_auto(ScalingScheme(regime, n, params))
    ens = simulate(measure, start_state(x0, n), math.floor(n * n * t), paths, seed)
    counts = ens.boundary_counts  # [kill, 0, 1, ..., J]
    j = np.arange(measure.probs.size)
    hit = (j >= 1) & (j / n >= window[0]) & (j / n <= window[1])
    departures = int(counts[0] + counts[2:].sum())
    in_window = int(counts[1:][hit].sum())
    leave = measure.kill + float(measure.probs[1:].sum())
    expected = float(measure.probs[hit].sum()) / leave
    observed = in_window / departures if departures else float("nan")
    sigma = math.sqrt(expected * (1 - expected) / departures) if departures else float("inf")
    return DepartureCheck(departures, in_window, observed, expected, sigma)


__all__ = [
    "KSResult", "ks_statistic", "cvm_statistic", "mean_abs_statistic", "positive_part", "live_mean",
    "Thresholds", "ExperimentConfig", "closed_form_reference", "ConvergenceRow", "ConvergenceReport",
    "run_convergence", "OccupationRow", "occupation_scaling", "occupation_csv", "DepartureCheck",
    "departure_window_check", "MeanEstimate",
]
