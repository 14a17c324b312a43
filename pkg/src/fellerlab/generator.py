"""Discrete generators of boundary walks, test functions satisfying the
boundary condition, martingale residuals and consistency residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .boundary import FellerParams
from .brw import JumpingMeasure, MeanEstimate, enumerate_exact, mean_ci, simulate
from .errors import BudgetExceeded, SingularSystem
from .scaling import REFLECTION, SOJOURN, ScalingScheme, build_measure

FD_STEP = 1e-5
FD_TOL = 1e-6
FD_POINTS = 100
SUP_GRID_POINTS = 200_001
BOUNDARY_TOL = 1e-10
INTERIOR_SLACK = 1e-15
MODULUS_GRID_POINTS = 10_000
EXACT_MAX_DEPTH = 12

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SupNorms:
    f: float
    f1: float
    f2: float


def _exp_sum(terms, order):
    def g(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, lam in terms:
            out = out + c * (-lam) ** order * np.exp(-lam * x)
        return out
    return g


def _two_exp_sup(terms, order) -> float:
    """Sup over ``[0, inf)`` of ``|sum c (-lam)^order exp(-lam x)|`` for one or two terms."""
    coefs = [(c * (-lam) ** order, lam) for c, lam in terms]
    g = lambda x: abs(math.fsum(c * math.exp(-lam * x) for c, lam in coefs))  # noqa: E731
    cands = [g(0.0)]
    if len(coefs) == 2:
        (c1, l1), (c2, l2) = coefs
        # interior extremum where c1 l1 e^{-l1 x} + c2 l2 e^{-l2 x} = 0
        ratio = -(c2 * l2) / (c1 * l1) if c1 * l1 != 0 else 0.0
        if ratio > 0 and l1 != l2:
            x = math.log(ratio) / (l2 - l1)
            if x > 0:
                cands.append(g(x))
    elif len(coefs) > 2:
        raise ValueError("closed-form sup only for up to two exponentials")
    return max(cands)


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A C^2 function on ``[0, inf)`` with its first two derivatives.

    ``exp_terms`` holds ``(c, lam)`` pairs when ``f = sum c exp(-lam x)``;
    that enables closed-form jump integrals and exact sup norms.
    """

    __test__ = False  # keep pytest from collecting this class

    f: Fn
    f1: Fn
    f2: Fn
    sup_norms: SupNorms
    decays_at_infinity: bool
    exp_terms: Optional[tuple] = None
    name: str = "f"

    @classmethod
    def exponentials(cls, terms: Sequence[tuple[float, float]], name: str = "exp") -> "TestFunction":
        terms = tuple((float(c), float(lam)) for c, lam in terms)
        if any(lam <= 0 for _, lam in terms):
            raise ValueError("exponential rates must be > 0")
        sups = SupNorms(*(_two_exp_sup(terms, k) for k in range(3)))
        return cls(_exp_sum(terms, 0), _exp_sum(terms, 1), _exp_sum(terms, 2), sups,
                   True, terms, name)

    @classmethod
    def from_callables(cls, f: Fn, f1: Fn, f2: Fn, support: float = 50.0,
                       decays_at_infinity: bool = True, name: str = "f") -> "TestFunction":
        """Sup norms are taken on a dense grid of ``[0, support]``."""
        grid = np.linspace(0.0, support, SUP_GRID_POINTS)
        sups = SupNorms(*(float(np.max(np.abs(g(grid)))) for g in (f, f1, f2)))
        return cls(f, f1, f2, sups, decays_at_infinity, None, name)

    def check_derivatives(self, lo: float = 0.0, hi: float = 5.0, points: int = FD_POINTS,
                          h: float = FD_STEP, tol: float = FD_TOL) -> bool:
        """Central-difference check of ``f1 = f'`` and ``f2 = f1'`` at sample points."""
        x = np.linspace(lo + h, hi, points)
        d1 = (self.f(x + h) - self.f(x - h)) / (2 * h)
        d2 = (self.f1(x + h) - self.f1(x - h)) / (2 * h)
        return bool(np.all(np.abs(d1 - self.f1(x)) <= tol) and np.all(np.abs(d2 - self.f2(x)) <= tol))


def _fvals(tf: TestFunction, n: int, states: np.ndarray) -> np.ndarray:
    return np.asarray(tf.f(np.asarray(states, dtype=float) / n), dtype=float)


def boundary_generator(measure: JumpingMeasure, n: int, tf: TestFunction) -> float:
    """``(P - I) f_n (0) = -p_kill f(0) + sum_j p_j (f(j/n) - f(0))``."""
    f0 = float(tf.f(np.array([0.0]))[0])
    support = np.flatnonzero(measure.probs)
    diffs = _fvals(tf, n, support) - f0
    return math.fsum([-measure.kill * f0, *(measure.probs[support] * diffs)])


def discrete_generator(measure: JumpingMeasure, n: int, tf: TestFunction, i) -> np.ndarray | float:
    """``(P - I) f_n (i)`` with ``f_n(i) = f(i/n)``; vectorized over ``i``."""
    i_arr = np.atleast_1d(np.asarray(i, dtype=np.int64))
    if np.any(i_arr < 0):
        raise ValueError("states must be >= 0")
    out = np.empty(i_arr.shape, dtype=float)
    inner = i_arr > 0
    if inner.any():
        k = i_arr[inner]
        out[inner] = 0.5 * (_fvals(tf, n, k + 1) + _fvals(tf, n, k - 1) - 2.0 * _fvals(tf, n, k))
    if (~inner).any():
        out[~inner] = boundary_generator(measure, n, tf)
    return float(out[0]) if np.ndim(i) == 0 else out


def scaled_generator(measure: JumpingMeasure, n: int, tf: TestFunction, x) -> np.ndarray | float:
    """``L^(n) f(x) = n^2 (P - I) f_n (floor(n x))``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("x must be >= 0")
    i = np.floor(n * x_arr).astype(np.int64)
    return n * n * discrete_generator(measure, n, tf, i if np.ndim(x) else int(i))


def jump_integral(params: FellerParams, tf: TestFunction) -> float:
    """``int (f(0) - f(x)) p4(dx)``; closed form for exponential test functions."""
    m = params.p4
    if m.is_zero:
        return 0.0
    if tf.exp_terms is not None:
        return math.fsum(c * m.exp_transform(lam) for c, lam in tf.exp_terms)
    f0 = float(tf.f(np.array([0.0]))[0])
    return m.integrate(lambda x: f0 - tf.f(x), tol=BOUNDARY_TOL)


def boundary_residual(params: FellerParams, tf: TestFunction) -> float:
    """Left side of the boundary condition ``p1 f(0) - p2 f'(0) + p3/2 f''(0) + int (f(0) - f) dp4``."""
    z = np.array([0.0])
    f0, d1, d2 = (float(g(z)[0]) for g in (tf.f, tf.f1, tf.f2))
    return math.fsum([params.p1 * f0, -params.p2 * d1, 0.5 * params.p3 * d2, jump_integral(params, tf)])


def _condition_weight(params: FellerParams, lam: float) -> float:
    """Boundary functional applied to ``exp(-lam x)``."""
    return math.fsum([params.p1, params.p2 * lam, 0.5 * params.p3 * lam * lam, params.p4.exp_transform(lam)])


def make_domain_function(params: FellerParams, lam1: float, lam2: float) -> TestFunction:
    """``a exp(-lam1 x) + b exp(-lam2 x)`` satisfying the boundary condition.

    Normalized by ``f(0) = 1``; if the condition forces ``f(0) = 0`` the
    normalization switches to ``f'(0) = 1``.
    """
    if not 0 < lam1 < lam2:
        raise ValueError("need 0 < lam1 < lam2")
    B1, B2 = _condition_weight(params, lam1), _condition_weight(params, lam2)
    det = B2 - B1
    if det != 0:
        a, b = B2 / det, -B1 / det
    elif B1 != 0:
        a = 1.0 / (lam2 - lam1)
        b = -a
    else:
        raise SingularSystem(det)
    tf = TestFunction.exponentials([(a, lam1), (b, lam2)], name=f"domain({lam1:g},{lam2:g})")
    res = boundary_residual(params, tf)
    scale = max(1.0, abs(B1), abs(B2))
    if abs(res) > BOUNDARY_TOL * scale:
        raise ArithmeticError(f"domain function violates the boundary condition: residual {res!r}")
    return tf


def _lookup_tables(measure, n, tf, start, m):
    """``f_n`` and ``(P - I) f_n`` on states ``0 .. start + J + m``; used for path functionals."""
    top = start + measure.J + m + 1
    states = np.arange(top + 1)
    return _fvals(tf, n, states), discrete_generator(measure, n, tf, states)


def _residual_rows(paths, fn, gen):
    """``f(X_m) - f(X_0) - sum_{k<m} G(X_k)`` per row; killed entries contribute 0."""
    alive = paths >= 0
    idx = np.where(alive, paths, 0)
    fv = np.where(alive, fn[idx], 0.0)
    gv = np.where(alive, gen[idx], 0.0)
    return fv[:, -1] - fv[:, 0] - gv[:, :-1].sum(axis=1)


def martingale_residual(measure: JumpingMeasure, start: int, tf: TestFunction, n: int, m: int,
                        mode: str = "exact", paths: int = 10_000, seed: int = 0):
    """``E[f_n(X_m) - f_n(X_0) - sum_{k<m} (P - I) f_n(X_k)]``.

    ``mode="exact"`` sums over the full path tree (depth ``<= 12``) and
    returns a float; ``mode="monte_carlo"`` returns a ``MeanEstimate``.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return 0.0 if mode == "exact" else MeanEstimate(0.0, 0.0, paths)
    fn, gen = _lookup_tables(measure, n, tf, start, m)
    if mode == "exact":
        if m > EXACT_MAX_DEPTH:
            raise BudgetExceeded(f"exact mode supports m <= {EXACT_MAX_DEPTH}, got {m}")
        return enumerate_exact(measure, start, m, lambda p: _residual_rows(p, fn, gen))
    if mode == "monte_carlo":
        ens = simulate(measure, start, m, paths, seed, record="full")
        return mean_ci(_residual_rows(ens.full, fn, gen))
    raise ValueError(f"unknown mode {mode!r}")


def increment_moment(measure: JumpingMeasure, start: int, tf: TestFunction, n: int, j: int,
                     weight: Callable[[np.ndarray], np.ndarray]) -> float:
    """Exact ``E[(M_{j+1} - M_j) g(X_j)]`` for a state weight ``g`` (zero at the cemetery)."""
    fn, gen = _lookup_tables(measure, n, tf, start, j + 1)

    def rows(p):
        alive = p >= 0
        idx = np.where(alive, p, 0)
        inc = (np.where(alive[:, j + 1], fn[idx[:, j + 1]], 0.0)
               - np.where(alive[:, j], fn[idx[:, j]] + gen[idx[:, j]], 0.0))
        return inc * np.where(alive[:, j], weight(idx[:, j]), 0.0)

    return enumerate_exact(measure, start, j + 1, rows)


@dataclass(frozen=True)
class BoundsReport:
    interior_max: float
    interior_bound: float
    boundary_value: float
    boundary_bound: float
    states_checked: int

    @property
    def interior_ok(self) -> bool:
        return self.interior_max <= self.interior_bound + INTERIOR_SLACK

    @property
    def boundary_ok(self) -> bool:
        return abs(self.boundary_value) <= self.boundary_bound * (1 + 1e-12) + INTERIOR_SLACK

    @property
    def ok(self) -> bool:
        return self.interior_ok and self.boundary_ok

    @property
    def interior_slack(self) -> float:
        return self.interior_bound - self.interior_max


def boundary_bound(scheme: ScalingScheme, tf: TestFunction) -> float:
    """Upper bound on ``|(P - I) f_n (0)|`` from the boundary parameters and sup norms."""
    p, n, s = scheme.params, scheme.n, tf.sup_norms
    num = p.p1 * s.f + p.p2 * s.f1 + (2 * s.f + s.f1) * p.p4.weighted_moment
    denom = n * n * p.p3 if scheme.regime == SOJOURN else n * p.p2
    return num / denom


def generator_bounds_check(scheme: ScalingScheme, tf: TestFunction,
                           measure: Optional[JumpingMeasure] = None) -> BoundsReport:
    """Sweep ``1 <= i <= n^2`` against ``|f''|_u / (2 n^2)`` and check the boundary bound."""
    n = scheme.n
    measure = build_measure(scheme) if measure is None else measure
    worst = 0.0
    block = 1 << 20
    for lo in range(1, n * n + 1, block):
        i = np.arange(lo, min(lo + block, n * n + 1))
        worst = max(worst, float(np.max(np.abs(discrete_generator(measure, n, tf, i)))))
    return BoundsReport(worst, tf.sup_norms.f2 / (2 * n * n),
                        boundary_generator(measure, n, tf), boundary_bound(scheme, tf), n * n)


@dataclass(frozen=True)
class GeneratorResidual:
    n: int
    interior_max: float
    interior_bound: float  # half the modulus of continuity of f'' at 1/n
    boundary: float  # chi(n) in the sojourn regime, gamma(n) in the reflection regime
    regime: str

    @property
    def interior_ok(self) -> bool:
        return self.interior_max <= self.interior_bound + INTERIOR_SLACK


def modulus_f2(tf: TestFunction, n: int, points: int = MODULUS_GRID_POINTS) -> float:
    """Modulus of continuity of ``f''`` at ``1/n`` on the grid ``k/n``, ``k < points``."""
    v = tf.f2(np.arange(points) / n)
    return float(np.max(np.abs(np.diff(v))))


def consistency_residuals(params: FellerParams, regime: str, tf: TestFunction,
                          n_list: Sequence[int], points: int = MODULUS_GRID_POINTS) -> list[GeneratorResidual]:
    """Interior and boundary residuals of ``L^(n) f`` against ``f''/2`` for each ``n``.

    The interior sweep covers ``1 <= i < points``, matching the grid used
    for the modulus of continuity.
    """
    res0 = boundary_residual(params, tf)
    if abs(res0) > BOUNDARY_TOL:
        raise ValueError(f"test function is outside the domain: boundary residual {res0!r}")
    out = []
    f2_0 = float(tf.f2(np.array([0.0]))[0])
    for n in n_list:
        scheme = ScalingScheme(regime, n, params)
        measure = build_measure(scheme)
        i = np.arange(1, points)
        interior = n * n * discrete_generator(measure, n, tf, i) - 0.5 * tf.f2(i / n)
        L0 = n * n * boundary_generator(measure, n, tf)
        boundary = 0.5 * f2_0 - L0 if regime == SOJOURN else L0 / n
        out.append(GeneratorResidual(n, float(np.max(np.abs(interior))),
                                     0.5 * modulus_f2(tf, n, points), boundary, regime))
    return out


def trend_ok(values: Sequence[float], threshold: float) -> bool:
    """Last magnitude below ``threshold`` and no increase between consecutive entries."""
    mags = [abs(v) for v in values]
    return mags[-1] <= threshold and all(b <= a for a, b in zip(mags, mags[1:]))


__all__ = [
    "SupNorms", "TestFunction", "discrete_generator", "scaled_generator", "boundary_generator",
    "jump_integral", "boundary_residual", "make_domain_function", "martingale_residual",
    "increment_moment", "BoundsReport", "boundary_bound", "generator_bounds_check",
    "GeneratorResidual", "modulus_f2", "consistency_residuals", "trend_ok", "REFLECTION", "SOJOURN",
]
