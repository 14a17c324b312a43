import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fellerlab.boundary import (
    ZERO, AtomMeasure, FellerParams, PowerDensity, UserDensity, boundary_stage, fbm_jump_law, validate,
)
from fellerlab.errors import JumpRateUndefined, QuadratureFailure

pos = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)
nonneg = st.one_of(st.just(0.0), pos)


def test_validate_examples():
    assert validate(FellerParams(0, 0, 1)).admissible
    assert validate(FellerParams(0, 0, 1)).regime == "sojourn"
    rep = validate(FellerParams(0, 1, 0))
    assert rep.admissible and rep.regime == "reflection"
    rep = validate(FellerParams(1, 0, 0, PowerDensity(1.0, 0.5)))
    assert not rep and rep.reason == "pure-jump boundary"


def test_validate_rejects_all_zero_and_divergent_moment():
    assert validate(FellerParams()).reason == "all parameters zero"
    rep = validate(FellerParams(0, 1, 0, PowerDensity(1.0, 2.0)))
    assert rep.reason == "infinite weighted moment"


def test_params_reject_negative_and_nonfinite():
    with pytest.raises(ValueError):
        FellerParams(-1, 0, 1)
    with pytest.raises(ValueError):
        FellerParams(0, math.inf, 1)


@given(nonneg, nonneg, nonneg, st.floats(min_value=1e-3, max_value=1e3))
def test_validate_is_scale_covariant(p1, p2, p3, c):
    params = FellerParams(p1, p2, p3, AtomMeasure.of([(0.5, 1.0)]))
    a, b = validate(params), validate(params.scaled(c))
    assert (a.admissible, a.reason, a.regime) == (b.admissible, b.reason, b.regime)


def test_interval_mass_examples():
    d2 = AtomMeasure.of([(2.0, 1.0)])
    assert d2.interval_mass(1.9, 2.0) == 1.0
    assert d2.interval_mass(2.0, 2.1) == 0.0
    assert PowerDensity(1.0, 0.5).interval_mass(0.25, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_interval_mass_rejects_bad_intervals():
    with pytest.raises(ValueError):
        ZERO.interval_mass(0.0, 1.0)
    with pytest.raises(ValueError):
        AtomMeasure.of([(1.0, 1.0)]).interval_mass(2.0, 1.0)


def test_power_density_mass_and_moment_flags():
    # integrable near 0: finite total mass
    assert PowerDensity(1.0, 0.5).total_mass == pytest.approx(2.0)
    # x^-3/2: infinite total mass, finite weighted moment
    m = PowerDensity(1.0, 1.5)
    assert math.isinf(m.total_mass)
    assert m.weighted_moment == pytest.approx(2.0)
    # x^-2: weighted moment diverges
    assert math.isinf(PowerDensity(1.0, 2.0).weighted_moment)


@given(st.floats(0.01, 2.0), st.floats(0.01, 2.0), st.floats(0.01, 2.0), st.sampled_from([0.3, 0.5, 1.0, 1.5]))
def test_interval_mass_additive(a, w1, w2, alpha):
    b, c = a + w1, a + w1 + w2
    for m in (PowerDensity(1.3, alpha, 3.0), AtomMeasure.of([(0.5, 1.0), (1.0, 2.0), (2.5, 0.5)])):
        assert m.interval_mass(a, c) == pytest.approx(m.interval_mass(a, b) + m.interval_mass(b, c), abs=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0, 1.5, 1.9])
def test_dyadic_partition_sums(alpha):
    m = PowerDensity(0.7, alpha, 2.0)
    eps = 1e-3
    edges = eps + (2.0 - eps) * np.arange(2 ** 10 + 1) / 2 ** 10
    parts = math.fsum(m.interval_mass(a, b) for a, b in zip(edges[:-1], edges[1:]))
    assert parts == pytest.approx(m.interval_mass(eps, 2.0), abs=1e-10)


def test_atom_cells_follow_half_open_convention():
    m = AtomMeasure.of([(2.0, 1.0), (0.35, 0.5)])
    idx, mass = m.cell_masses(10, 2, 99)
    assert idx.tolist() == [3, 19]
    assert mass.tolist() == [0.5, 1.0]


@pytest.mark.parametrize("alpha,M", [(0.5, 1.0), (1.0, 1.0), (1.5, 1.0), (1.5, math.inf), (0.3, 4.0)])
@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_exp_transform_matches_quadrature(alpha, M, lam):
    m = PowerDensity(1.2, alpha, M)
    f = lambda x: 1.2 * x ** -alpha * -math.expm1(-lam * x)  # noqa: E731
    ref = integrate.quad(f, 0, min(1.0, M), epsabs=1e-13, limit=200)[0]
    if M > 1:
        ref += integrate.quad(f, 1.0, M, epsabs=1e-13, limit=200)[0]
    assert m.exp_transform(lam) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_user_density_cross_checks_declared_moment():
    dens = lambda x: x ** -0.5  # noqa: E731
    m = UserDensity(dens, declared_moment=2.0 / 3.0)
    assert m.interval_mass(0.25, 1.0) == pytest.approx(1.0, abs=1e-11)
    assert m.total_mass == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(ValueError):
        UserDensity(dens, declared_moment=1.0)


def test_user_density_with_antiderivative_and_quadrature_failure():
    m = UserDensity(lambda x: 3 * x ** 2, declared_moment=0.75, antiderivative=lambda x: x ** 3)
    assert m.interval_mass(0.5, 1.0) == 0.875
    wild = UserDensity(lambda x: np.sin(1 / x) ** 2 / x ** 1.9 * x, declared_moment=math.inf)
    with pytest.raises(QuadratureFailure):
        wild.integrate(lambda x: np.ones_like(x), tol=1e-14)


def test_boundary_stage_examples():
    assert boundary_stage(FellerParams(1, 0, 2)).total == 2.0
    est = boundary_stage(FellerParams(1, 1, 0))
    assert (est.sojourn_mean, est.reflection_time, est.total) == (0.0, 1.0, 1.0)
    with pytest.raises(JumpRateUndefined, match="jump-rate undefined"):
        boundary_stage(FellerParams(0, 0, 1))
    with pytest.raises(JumpRateUndefined):
        boundary_stage(FellerParams(0, 1, 0, PowerDensity(1.0, 1.5)))


def test_fbm_jump_law_examples():
    law = fbm_jump_law(FellerParams(1, 0, 1, AtomMeasure.of([(2.0, 1.0)])))
    assert law.kill == 0.5 and law.jump.masses == (0.5,)
    assert fbm_jump_law(FellerParams(1, 0, 1)).kill == 1.0
    law = fbm_jump_law(FellerParams(0, 1, 0, AtomMeasure.of([(1.0, 3.0)])))
    assert law.kill == 0.0 and law.jump.total_mass == 1.0


@given(pos, st.lists(st.tuples(st.floats(0.01, 10), pos), min_size=1, max_size=6))
def test_fbm_jump_law_normalized(p1, atoms):
    law = fbm_jump_law(FellerParams(p1, 0, 1, AtomMeasure.of(atoms)))
    assert law.kill >= 0 and all(w >= 0 for w in law.jump.masses)
    assert law.total == pytest.approx(1.0, abs=1e-12)
