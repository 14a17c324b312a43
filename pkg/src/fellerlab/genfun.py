"""Return-probability generating function of a boundary walk started at 0,
shifted Catalan numbers and the occupation bound for walks with ``p_0 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .brw import JumpingMeasure

DEFAULT_TERMS = 400
CATALAN_EXACT_LIMIT = 64


def escape_ratio(x):
    """``(1 - sqrt(1 - x^2)) / x`` evaluated without cancellation; 0 at x = 0."""
    x = np.asarray(x, dtype=float)
    return x / (1.0 + np.sqrt(1.0 - x * x))


def f_closed(measure: JumpingMeasure, x: float) -> float:
    """Closed form of ``F(x) = sum_k P_0(X_k = 0) x^k`` for ``0 <= x < 1``."""
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1), got {x!r}")
    g = float(escape_ratio(x))
    powers = g ** np.arange(measure.probs.size, dtype=float)
    powers[0] = 1.0
    inner = math.fsum(measure.probs * powers)
    return 1.0 / (1.0 - x * inner)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    coefficients: np.ndarray  # a_k = P_0(X_k = 0), k = 0..K
    measure: JumpingMeasure

    @property
    def K(self) -> int:
        return self.coefficients.size - 1

    def partial_sum(self, x: float) -> float:
        return math.fsum(self.coefficients * x ** np.arange(self.coefficients.size, dtype=float))

    def occupation(self, m: int) -> float:
        """``sum_{k < m} a_k``."""
        if m > self.coefficients.size:
            raise ValueError("series too short for this horizon")
        return math.fsum(self.coefficients[:m])


def tail_bound(x: float, K: int) -> float:
    """Bound on ``sum_{k > K} a_k x^k`` using ``a_k <= 1``."""
    return x ** (K + 1) / (1.0 - x)


def f_series(measure: JumpingMeasure, K: int) -> ReturnSeries:
    """``a_0 .. a_K`` by forward iteration of the state distribution.

    Only states ``<= K - k`` can still reach 0 by step ``K`` after ``k``
    steps, so the vector is truncated accordingly.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    a, _ = _forward(measure, K, truncate=True)
    return ReturnSeries(a, measure)


def catalan(i: int, j0: int) -> int:
    """Shifted Catalan number: paths from ``i`` first hitting 0 at step ``i + 2 j0``."""
    if i < 1 or j0 < 0:
        raise ValueError("need i >= 1 and j0 >= 0")
    L = i + 2 * j0
    if L > CATALAN_EXACT_LIMIT:
        raise OverflowError(f"i + 2 j0 = {L} exceeds the exact-arithmetic guard {CATALAN_EXACT_LIMIT}")
    diff = math.comb(L - 1, j0) - (math.comb(L - 1, j0 - 1) if j0 >= 1 else 0)
    num = i * math.comb(L, j0)
    assert num % L == 0 and num // L == diff, (i, j0)
    return diff


def catalan_gf(i: int, t: float) -> float:
    """``sum_j0 M_{i,j0} t^j0 = ((1 - sqrt(1 - 4t)) / (2t))^i`` on ``(0, 1/4]``."""
    if not 0.0 < t <= 0.25:
        raise ValueError(f"t must lie in (0, 1/4], got {t!r}")
    return (2.0 / (1.0 + math.sqrt(1.0 - 4.0 * t))) ** i


def catalan_first_passage(i: int, j: int) -> float:
    """``P_i(tau = j)`` for simple random walk via shifted Catalan numbers."""
    if i < 1:
        raise ValueError("i must be >= 1")
    if j < i or (j - i) % 2:
        return 0.0
    j0 = (j - i) // 2
    if j <= CATALAN_EXACT_LIMIT:
        return catalan(i, j0) / (1 << j)
    return float(first_passage_array(i, np.array([j0]))[0])


def first_passage_array(i: int, j0: np.ndarray) -> np.ndarray:
    """``M_{i,j0} / 2^(i + 2 j0)`` in log space, for long horizons."""
    j0 = np.asarray(j0, dtype=float)
    L = i + 2.0 * j0
    logv = (np.log(i) - np.log(L) + gammaln(L + 1) - gammaln(j0 + 1) - gammaln(L - j0 + 1)
            - L * math.log(2.0))
    return np.exp(logv)


def occupation_bound(m: int) -> float:
    """Upper bound ``e / sqrt(1 - exp(-2/m))`` on expected visits to 0 in ``m`` steps."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return math.e / math.sqrt(-math.expm1(-2.0 / m))


def total_visits(measure: JumpingMeasure, K: int = 2000) -> float:
    """``sum_k a_k`` from the first ``K`` terms plus an exact tail.

    From any live state the interior walk returns to 0 almost surely, so by
    the Markov property at step ``K`` the tail ``sum_{k >= K} a_k`` equals
    ``P(alive at K) * sum_k a_k``.  Solving gives
    ``sum_{k < K} a_k / (1 - P(alive at K))``.
    """
    if measure.kill <= 0:
        raise ValueError("total visits are finite only with killing")
    a, alive = _forward(measure, K, truncate=False)
    return math.fsum(a[:K]) / (1.0 - alive)


def _forward(measure, K, truncate):
    """Iterate the state distribution from 0; returns ``(a_0..a_K, P(alive at K))``."""
    size = measure.J + K + 2
    dist = np.zeros(size)
    dist[0] = 1.0
    jump = np.zeros(size)
    jump[: measure.probs.size] = measure.probs
    a = np.empty(K + 1)
    a[0] = 1.0
    for k in range(1, K + 1):
        new = np.zeros(size)
        new[:-1] += 0.5 * dist[1:]       # i+1 -> i
        new[2:] += 0.5 * dist[1:-1]      # i-1 -> i for i-1 >= 1
        new += dist[0] * jump
        dist = new
        if truncate and K - k + 1 < size:
            # states above K - k cannot return to 0 in time
            dist[K - k + 1:] = 0.0
        a[k] = dist[0]
    return a, math.fsum(dist)
