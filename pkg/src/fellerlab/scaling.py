"""n-indexed boundary walks whose diffusive rescaling approximates a given
Feller Brownian motion.

Two schemes exist.  With ``p3 > 0`` (sojourn regime) boundary weights scale
like ``1/n^2`` except the reflection step ``1/n``; the walk holds at 0 with
the leftover probability.  With ``p3 = 0, p2 > 0`` (reflection regime)
weights scale like ``1/n`` and the leftover goes to the step 0 -> 1.
In both, ``p4`` is discretized on the cells ``(j/n, (j+1)/n]``,
``2 <= j <= n^2 - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .boundary import ZERO, FellerParams, P4Measure, validate
from .brw import DELTA, BRWPath, JumpingMeasure
from .errors import InadmissibleParams, NTooSmall

SOJOURN = "sojourn"
REFLECTION = "reflection"
REGIMES = (SOJOURN, REFLECTION)
MAX_DENSE_SUPPORT = 50_000_000


def infer_regime(params: FellerParams) -> str:
    report = validate(params)
    if not report.admissible:
        raise InadmissibleParams(report.reason)
    return report.regime


@dataclass(frozen=True)
class ScalingScheme:
    regime: str
    n: int
    params: FellerParams

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.regime == SOJOURN and not self.params.p3 > 0:
            raise ValueError("sojourn regime requires p3 > 0")
        if self.regime == REFLECTION and not (self.params.p2 > 0 and self.params.p3 == 0):
            raise ValueError("reflection regime requires p2 > 0 and p3 = 0")

    def with_n(self, n: int) -> "ScalingScheme":
        return ScalingScheme(self.regime, n, self.params)


def _raw_weights(scheme: ScalingScheme):
    """Boundary weights before the residual is filled in: (kill, {j: p_j}, residual index)."""
    p, n = scheme.params, scheme.n
    idx, cells = p.p4.cell_masses(n, 2, n * n - 1)
    if scheme.regime == SOJOURN:
        scale = n * n * p.p3
        weights = {1: p.p2 / (n * p.p3)} if p.p2 > 0 else {}
        kill = p.p1 / scale
        residual_at = 0
    else:
        scale = n * p.p2
        weights = {}
        kill = p.p1 / scale
        residual_at = 1
    for j, m in zip(idx.tolist(), cells.tolist()):
        weights[j] = weights.get(j, 0.0) + m / scale
    return kill, weights, residual_at


def _residual(kill, weights):
    return 1.0 - math.fsum([kill, *weights.values()])


def build_measure(scheme: ScalingScheme) -> JumpingMeasure:
    """Jumping measure of the n-th approximating walk.

    Raises ``NTooSmall`` when the residual probability (``p_0`` in the
    sojourn regime, ``p_1`` in the reflection regime) is negative.
    """
    kill, weights, at = _raw_weights(scheme)
    res = _residual(kill, weights)
    if res < 0:
        raise NTooSmall(scheme.n, res, minimal_n(scheme))
    weights[at] = weights.get(at, 0.0) + res
    top = max(weights)
    if top > MAX_DENSE_SUPPORT:
        raise ValueError(f"boundary support {top} too large")
    probs = np.zeros(top + 1)
    for j, w in weights.items():
        probs[j] = w
    return JumpingMeasure(probs, kill)


def minimal_n(scheme: ScalingScheme, limit: int = 1 << 20) -> int:
    """First n in the doubling sequence n, 2n, 4n, ... with a nonnegative residual."""
    n = scheme.n
    while n <= limit:
        kill, weights, _ = _raw_weights(scheme.with_n(n))
        if _residual(kill, weights) >= 0:
            return n
        n *= 2
    raise ValueError(f"no admissible n up to {limit}")


def build_measure_auto(scheme: ScalingScheme) -> tuple[JumpingMeasure, int]:
    """Like ``build_measure`` but bumps n to the minimal admissible value."""
    try:
        return build_measure(scheme), scheme.n
    except NTooSmall as exc:
        return build_measure(scheme.with_n(exc.n_min)), exc.n_min


def build_pure_jump_measure(params: FellerParams, n: int, experimental: bool = False) -> JumpingMeasure:
    """Candidate walk for ``p2 = p3 = 0`` (no convergence guarantee).

    Kill with ``p1 / (p1 + p4((1/n, n]))``, jump to ``j`` with the cell mass
    over the same normalizer for ``1 <= j <= n^2 - 1``.
    """
    if not experimental:
        raise InadmissibleParams("pure-jump boundary: pass experimental=True to build the unsupported scheme")
    idx, cells = params.p4.cell_masses(n, 1, n * n - 1)
    norm = params.p1 + math.fsum(cells)
    if norm <= 0:
        raise InadmissibleParams("pure-jump scheme needs p1 + p4((1/n, n]) > 0")
    probs = np.zeros(int(idx[-1]) + 1 if idx.size else 1)
    probs[idx] = cells / norm
    return JumpingMeasure(probs, params.p1 / norm)


@dataclass(frozen=True)
class Preset:
    name: str
    params: FellerParams
    regime: str

    def scheme(self, n: int) -> ScalingScheme:
        return ScalingScheme(self.regime, n, self.params)


PRESETS = ("absorbed", "exponential_holding", "sticky", "mixed", "reflected", "elastic")


def preset(name: str, p1: Optional[float] = None, p2: Optional[float] = None,
           p3: Optional[float] = None, p4: P4Measure = ZERO) -> Preset:
    """Classical boundary behaviours; unspecified coefficients default to 1.

    ``p4`` may be attached to any preset; the regime is decided by (p2, p3).
    """
    one = lambda v: 1.0 if v is None else float(v)  # noqa: E731
    if name == "absorbed":
        params = FellerParams(0.0, 0.0, one(p3), p4)
    elif name == "exponential_holding":
        params = FellerParams(one(p1), 0.0, one(p3), p4)
    elif name == "sticky":
        params = FellerParams(0.0, one(p2), one(p3), p4)
    elif name == "mixed":
        params = FellerParams(one(p1), one(p2), one(p3), p4)
    elif name == "reflected":
        params = FellerParams(0.0, one(p2), 0.0, p4)
    elif name == "elastic":
        params = FellerParams(one(p1), one(p2), 0.0, p4)
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    for label, v in (("p1", params.p1), ("p2", params.p2), ("p3", params.p3)):
        if v < 0:
            raise ValueError(f"{label} must be >= 0")
    return Preset(name, params, infer_regime(params))


@dataclass(frozen=True)
class RescaledPath:
    """``t -> X_{floor(n^2 t)} / n`` on ``[0, T]``; killed values are ``DELTA``."""

    values: tuple
    n: int
    T: float

    @property
    def grid_dt(self) -> float:
        return 1.0 / self.n ** 2

    def at(self, t: float) -> Union[float, str]:
        if not 0 <= t <= self.T:
            raise ValueError("t outside [0, T]")
        return self.values[math.floor(self.n * self.n * t)]


def rescale(path: BRWPath, n: int, T: float) -> RescaledPath:
    m = math.floor(n * n * T)
    horizon = len(path.states) - 1 if path.killed_at is None else math.inf
    if m > horizon:
        raise ValueError(f"path has {len(path.states)} states, need {m + 1}")
    vals = []
    for k in range(m + 1):
        if path.killed_at is not None and k >= path.killed_at:
            vals.append(DELTA)
        else:
            vals.append(path.states[k] / n)
    return RescaledPath(tuple(vals), n, T)


def start_state(x0: float, n: int) -> int:
    if x0 < 0:
        raise ValueError("x0 must be >= 0")
    return math.floor(n * x0)


@dataclass(frozen=True)
class DiscreteStageEstimate:
    xi_n: float


def discrete_stage(measure: JumpingMeasure, n: int) -> DiscreteStageEstimate:
    """Expected first-stage boundary time of the rescaled walk."""
    q = math.fsum([measure.kill, *measure.probs[2:]])
    p0, p1 = measure.p(0), measure.p(1)
    if q == 0:
        if p0 == 0 and p1 == 0:
            return DiscreteStageEstimate(0.0)
        raise ValueError("discrete stage undefined: no killing or long jumps (q = 0)")
    return DiscreteStageEstimate((p0 / q + (p1 / q) ** 2) / (n * n))
