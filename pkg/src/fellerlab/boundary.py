"""Boundary parameters of Feller's Brownian motion on [0, inf).

A process is described by ``(p1, p2, p3, p4)``: killing, reflection and
sojourn weights plus a jump-in measure ``p4`` on (0, inf) with
``int (x ^ 1) p4(dx) < inf``.  Parameters are kept exactly as given; they
are only meaningful up to a common positive factor, and every downstream
formula is ratio-based.

Interval masses always use half-open cells ``(a, b]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .errors import JumpRateUndefined, QuadratureFailure

QUAD_TOL = 1e-12
MOMENT_RTOL = 1e-6


class P4Measure:
    """Jump-in measure on (0, inf).

    Subclasses provide exact interval masses.  ``total_mass`` may be
    ``inf``; ``weighted_moment`` is ``int (x ^ 1) p4(dx)``.
    """

    kind = "abstract"

    @property
    def total_mass(self) -> float:
        raise NotImplementedError

    @property
    def weighted_moment(self) -> float:
        raise NotImplementedError

    def _mass(self, a: float, b: float) -> float:
        raise NotImplementedError

    def interval_mass(self, a: float, b: float) -> float:
        """Mass of the half-open interval ``(a, b]``; requires ``0 < a <= b``."""
        if not a > 0:
            raise ValueError(f"interval_mass needs a > 0, got a={a!r}")
        if b < a:
            raise ValueError(f"interval_mass needs b >= a, got ({a!r}, {b!r}]")
        if a == b:
            return 0.0
        return self._mass(a, b)

    def cell_masses(self, n: int, j_lo: int, j_hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Masses of ``(j/n, (j+1)/n]`` for ``j_lo <= j <= j_hi`` (only nonzero cells).

        Returns ``(indices, masses)``.
        """
        raise NotImplementedError

    def exp_transform(self, lam: float) -> float:
        """``int (1 - exp(-lam x)) p4(dx)``."""
        raise NotImplementedError

    def integrate(self, g: Callable[[np.ndarray], np.ndarray], tol: float = 1e-10) -> float:
        """``int g dp4`` for ``g`` with ``|g(x)| <= C (x ^ 1)``."""
        raise NotImplementedError

    def scaled(self, factor: float) -> "P4Measure":
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return self.total_mass == 0.0


@dataclass(frozen=True)
class ZeroMeasure(P4Measure):
    kind = "zero"

    @property
    def total_mass(self):
        return 0.0

    @property
    def weighted_moment(self):
        return 0.0

    def _mass(self, a, b):
        return 0.0

    def cell_masses(self, n, j_lo, j_hi):
        return np.zeros(0, dtype=np.int64), np.zeros(0)

    def exp_transform(self, lam):
        return 0.0

    def integrate(self, g, tol=1e-10):
        return 0.0

    def scaled(self, factor):
        return self


@dataclass(frozen=True)
class AtomMeasure(P4Measure):
    """Finite sum of point masses ``sum m_k delta_{x_k}`` with ``x_k > 0``."""

    locations: tuple[float, ...]
    masses: tuple[float, ...]
    kind = "finite-atoms"

    def __post_init__(self):
        if len(self.locations) != len(self.masses):
            raise ValueError("locations and masses differ in length")
        for x, m in zip(self.locations, self.masses):
            if not (x > 0 and math.isfinite(x)):
                raise ValueError(f"atom location must be finite and > 0, got {x!r}")
            if not (m > 0 and math.isfinite(m)):
                raise ValueError(f"atom mass must be finite and > 0, got {m!r}")

    @classmethod
    def of(cls, pairs: Sequence[tuple[float, float]]) -> "AtomMeasure":
        pairs = sorted((float(x), float(m)) for x, m in pairs)
        return cls(tuple(x for x, _ in pairs), tuple(m for _, m in pairs))

    @property
    def total_mass(self):
        return math.fsum(self.masses)

    @property
    def weighted_moment(self):
        return math.fsum(min(x, 1.0) * m for x, m in zip(self.locations, self.masses))

    def _mass(self, a, b):
        return math.fsum(m for x, m in zip(self.locations, self.masses) if a < x <= b)

    def cell_masses(self, n, j_lo, j_hi):
        acc: dict[int, list[float]] = {}
        for x, m in zip(self.locations, self.masses):
            # x in (j/n, (j+1)/n]  <=>  j = ceil(n x) - 1
            j = math.ceil(n * x) - 1
            # guard the float product n*x against off-by-one at cell edges
            while j + 1 < n * x:
                j += 1
            while j >= n * x:
                j -= 1
            if j_lo <= j <= j_hi:
                acc.setdefault(j, []).append(m)
        idx = np.array(sorted(acc), dtype=np.int64)
        return idx, np.array([math.fsum(acc[j]) for j in idx])

    def exp_transform(self, lam):
        return math.fsum(m * -math.expm1(-lam * x) for x, m in zip(self.locations, self.masses))

    def integrate(self, g, tol=1e-10):
        if not self.locations:
            return 0.0
        vals = np.asarray(g(np.asarray(self.locations)), dtype=float)
        return math.fsum(vals * np.asarray(self.masses))

    def scaled(self, factor):
        return AtomMeasure(self.locations, tuple(m * factor for m in self.masses))


def _power_integral(c: float, alpha: float, a: float, b: float) -> float:
    """``c * int_a^b x^-alpha dx`` for ``0 <= a <= b <= inf``."""
    if b <= a:
        return 0.0
    if alpha == 1.0:
        if a == 0.0 or math.isinf(b):
            return math.inf
        return c * math.log(b / a)
    e = 1.0 - alpha
    if a == 0.0 and e <= 0:
        return math.inf
    if math.isinf(b):
        if e >= 0:
            return math.inf
        return c * (-(a ** e)) / e
    return c * (b ** e - a ** e) / e


@dataclass(frozen=True)
class PowerDensity(P4Measure):
    """``c x^(-alpha) dx`` on ``(0, M]`` (``M`` may be ``inf``)."""

    c: float
    alpha: float
    M: float = 1.0
    kind = "density"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("power density needs c > 0")
        if not self.M > 0:
            raise ValueError("power density needs M > 0")
        if math.isinf(self.M) and self.alpha <= 1.0:
            raise ValueError("power density on (0, inf) needs alpha > 1 for finite tail mass")

    @property
    def total_mass(self):
        return _power_integral(self.c, self.alpha, 0.0, self.M)

    @property
    def weighted_moment(self):
        near = math.inf if self.alpha >= 2 else self.c * min(1.0, self.M) ** (2 - self.alpha) / (2 - self.alpha)
        far = _power_integral(self.c, self.alpha, 1.0, self.M) if self.M > 1 else 0.0
        return near + far

    def _mass(self, a, b):
        return _power_integral(self.c, self.alpha, a, min(b, self.M)) if a < self.M else 0.0

    def cell_masses(self, n, j_lo, j_hi):
        if not math.isinf(self.M):
            j_hi = min(j_hi, math.ceil(n * self.M))
        if j_hi < j_lo:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        j = np.arange(j_lo, j_hi + 1, dtype=np.int64)
        left = j / n
        right = np.minimum((j + 1) / n, self.M)
        if self.alpha == 1.0:
            masses = self.c * np.log(right / left)
        else:
            e = 1.0 - self.alpha
            masses = self.c * (right ** e - left ** e) / e
        masses = np.where(left < self.M, masses, 0.0)
        keep = masses > 0
        return j[keep], masses[keep]

    def exp_transform(self, lam):
        # integrate by parts: int_0^M x^-a (1 - e^{-lam x}) dx
        c, a, M = self.c, self.alpha, self.M
        if a >= 2:
            return math.inf
        s = 2.0 - a
        lower_gamma = special.gamma(s) * (1.0 if math.isinf(M) else special.gammainc(s, lam * M))
        if a == 1.0:
            if math.isinf(M):
                return math.inf
            z = lam * M
            return c * (special.exp1(z) + math.log(z) + np.euler_gamma)
        boundary = 0.0 if math.isinf(M) else -math.expm1(-lam * M) * M ** (1 - a) / (1 - a)
        return c * (boundary - lam ** (a - 1) * lower_gamma / (1 - a))

    def integrate(self, g, tol=1e-10):
        return _quad_density(lambda x: self.c * x ** (-self.alpha), g, self.M, tol)

    def scaled(self, factor):
        return PowerDensity(self.c * factor, self.alpha, self.M)


def _quad(fn, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, a, b, epsabs=tol, epsrel=0.0, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    return val


def _quad_density(density, g, M, tol):
    fn = lambda x: g(np.asarray(x)) * density(x)  # noqa: E731
    upper = min(1.0, M)
    total = _quad(fn, 0.0, upper, tol)
    if M > 1.0:
        total += _quad(fn, 1.0, M, tol)
    return float(total)


@dataclass(frozen=True)
class UserDensity(P4Measure):
    """User density on ``(0, M]`` with a declared weighted moment.

    The declared moment is trusted but cross-checked by quadrature at
    construction.  Without an analytic ``antiderivative`` interval masses
    fall back to adaptive quadrature with absolute tolerance 1e-12.
    """

    density: Callable[[float], float]
    declared_moment: float
    M: float = 1.0
    antiderivative: Optional[Callable[[float], float]] = None
    declared_total: Optional[float] = None
    kind = "density"

    def __post_init__(self):
        if math.isfinite(self.declared_moment):
            check = _quad_density(self.density, lambda x: np.minimum(x, 1.0), self.M, QUAD_TOL)
            if abs(check - self.declared_moment) > MOMENT_RTOL * max(abs(self.declared_moment), 1e-300):
                raise ValueError(
                    f"declared weighted moment {self.declared_moment!r} disagrees with quadrature {check!r}"
                )

    @property
    def total_mass(self):
        if self.declared_total is not None:
            return self.declared_total
        try:
            return _quad_density(self.density, lambda x: np.ones_like(x, dtype=float), self.M, QUAD_TOL)
        except QuadratureFailure:
            return math.inf

    @property
    def weighted_moment(self):
        return self.declared_moment

    def _mass(self, a, b):
        b = min(b, self.M)
        if a >= b:
            return 0.0
        if self.antiderivative is not None:
            return self.antiderivative(b) - self.antiderivative(a)
        return _quad(self.density, a, b, QUAD_TOL)

    def cell_masses(self, n, j_lo, j_hi):
        if not math.isinf(self.M):
            j_hi = min(j_hi, math.ceil(n * self.M))
        idx = np.arange(j_lo, j_hi + 1, dtype=np.int64)
        masses = np.array([self.interval_mass(j / n, (j + 1) / n) for j in idx])
        keep = masses > 0
        return idx[keep], masses[keep]

    def exp_transform(self, lam):
        return self.integrate(lambda x: -np.expm1(-lam * x))

    def integrate(self, g, tol=1e-10):
        return _quad_density(self.density, g, self.M, tol)

    def scaled(self, factor):
        anti = self.antiderivative
        return UserDensity(
            lambda x: factor * self.density(x),
            self.declared_moment * factor,
            self.M,
            None if anti is None else (lambda x: factor * anti(x)),
            None if self.declared_total is None else self.declared_total * factor,
        )


ZERO = ZeroMeasure()


@dataclass(frozen=True)
class FellerParams:
    p1: float = 0.0
    p2: float = 0.0
    p3: float = 0.0
    p4: P4Measure = field(default=ZERO)

    def __post_init__(self):
        for name in ("p1", "p2", "p3"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def scaled(self, c: float) -> "FellerParams":
        return FellerParams(self.p1 * c, self.p2 * c, self.p3 * c, self.p4.scaled(c))

    @property
    def jump_rate(self) -> float:
        """``p1 + |p4|`` (may be inf)."""
        return self.p1 + self.p4.total_mass


@dataclass(frozen=True)
class ValidationReport:
    admissible: bool
    reason: Optional[str] = None
    regime: Optional[str] = None

    def __bool__(self):
        return self.admissible


def validate(params: FellerParams) -> ValidationReport:
    """Report whether ``params`` can be approximated by a scaled boundary walk."""
    m = params.p4
    if params.p1 == params.p2 == params.p3 == 0 and m.is_zero:
        return ValidationReport(False, "all parameters zero")
    if not math.isfinite(m.weighted_moment):
        return ValidationReport(False, "infinite weighted moment")
    if params.p3 > 0:
        return ValidationReport(True, regime="sojourn")
    if params.p2 > 0:
        return ValidationReport(True, regime="reflection")
    return ValidationReport(False, "pure-jump boundary")


@dataclass(frozen=True)
class BoundaryStageEstimate:
    sojourn_mean: float
    reflection_time: float
    total: float


def _finite_jump_rate(params: FellerParams) -> float:
    rate = params.jump_rate
    if not math.isfinite(rate) or rate <= 0:
        raise JumpRateUndefined()
    return rate


def boundary_stage(params: FellerParams) -> BoundaryStageEstimate:
    """Mean sojourn time plus squared-local-time reflection time at 0."""
    rate = _finite_jump_rate(params)
    xi1 = params.p3 / rate
    xi2 = (params.p2 / rate) ** 2
    return BoundaryStageEstimate(xi1, xi2, xi1 + xi2)


@dataclass(frozen=True)
class FBMJumpLaw:
    """Normalized exit law at 0: killing weight plus normalized jump measure."""

    kill: float
    jump: P4Measure

    @property
    def total(self) -> float:
        return self.kill + self.jump.total_mass


def fbm_jump_law(params: FellerParams) -> FBMJumpLaw:
    rate = _finite_jump_rate(params)
    return FBMJumpLaw(params.p1 / rate, params.p4.scaled(1.0 / rate))
