import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fellerlab.boundary import ZERO, AtomMeasure, FellerParams, PowerDensity, boundary_stage
from fellerlab.brw import DELTA, BRWPath, JumpingMeasure
from fellerlab.errors import InadmissibleParams, NTooSmall
from fellerlab.scaling import (
    PRESETS, ScalingScheme, build_measure, build_measure_auto, build_pure_jump_measure, discrete_stage,
    minimal_n, preset, rescale, start_state,
)

D2 = AtomMeasure.of([(2.0, 1.0)])


def test_build_measure_examples():
    m = build_measure(ScalingScheme("sojourn", 10, FellerParams(0, 0, 1)))
    assert m.kill == 0.0 and m.probs.tolist() == [1.0]
    m = build_measure(ScalingScheme("sojourn", 10, FellerParams(1, 0, 1)))
    assert m.kill == 0.01 and m.p(0) == 0.99
    m = build_measure(ScalingScheme("reflection", 10, FellerParams(1, 1, 0)))
    assert m.kill == 0.1 and m.p(1) == 0.9 and m.p(0) == 0.0
    m = build_measure(ScalingScheme("sojourn", 10, FellerParams(0, 0, 1, D2)))
    assert m.p(19) == 0.01 and m.p(0) == 0.99
    assert np.count_nonzero(m.probs) == 2


def test_scheme_invariants():
    with pytest.raises(ValueError):
        ScalingScheme("sojourn", 10, FellerParams(0, 1, 0))
    with pytest.raises(ValueError):
        ScalingScheme("reflection", 10, FellerParams(0, 1, 1))
    with pytest.raises(ValueError):
        ScalingScheme("sojourn", 1, FellerParams(0, 0, 1))


def test_negative_residual_reports_minimal_n():
    scheme = ScalingScheme("sojourn", 2, FellerParams(500, 0, 1))
    with pytest.raises(NTooSmall, match="n too small") as exc:
        build_measure(scheme)
    # residual 1 - 500/n^2 >= 0 first at n = 32 along 2, 4, 8, 16, 32
    assert exc.value.n_min == 32 == minimal_n(scheme)
    m, n = build_measure_auto(scheme)
    assert n == 32 and m.p(0) == pytest.approx(1 - 500 / 1024, abs=1e-15)
    with pytest.raises(NTooSmall):
        build_measure(ScalingScheme("reflection", 4, FellerParams(10, 1, 0)))


params_strategy = st.builds(
    FellerParams,
    st.floats(0, 5), st.floats(0, 5), st.floats(0.01, 5),
    st.sampled_from([ZERO, D2, AtomMeasure.of([(0.05, 2.0), (0.5, 1.0), (7.0, 0.3)]),
                     PowerDensity(0.5, 0.5), PowerDensity(0.2, 1.5, 3.0)]),
)


@given(params_strategy, st.integers(2, 60), st.booleans())
def test_built_measures_are_probability_vectors(params, n, reflect):
    if reflect:
        params = FellerParams(params.p1, params.p2 + 0.5, 0.0, params.p4)
    regime = "reflection" if reflect else "sojourn"
    try:
        m = build_measure(ScalingScheme(regime, n, params))
    except NTooSmall:
        return
    assert m.kill >= 0 and np.all(m.probs >= 0)
    assert m.kill + math.fsum(m.probs) == pytest.approx(1.0, abs=1e-12)
    assert m.J <= n * n - 1


def test_support_truncated_below_n_squared():
    p = FellerParams(0, 0, 1, PowerDensity(0.01, 1.5, math.inf))
    m = build_measure(ScalingScheme("sojourn", 20, p))
    assert m.J == 20 * 20 - 1


@pytest.mark.parametrize("name,idx", [("sticky", 0), ("mixed", 0), ("elastic", 1)])
def test_residual_converges_to_one(name, idx):
    p = preset(name, p4=AtomMeasure.of([(0.5, 1.0)]))
    ns = [100, 200, 400, 800, 1600]
    gaps = [1 - build_measure(p.scheme(n)).p(idx) for n in ns]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    C = max(g * n for g, n in zip(gaps, ns))
    assert all(g <= C / n for g, n in zip(gaps, ns))


@pytest.mark.parametrize("params", [
    FellerParams(1, 0, 1), FellerParams(1, 1, 0), FellerParams(1, 1, 1),
    FellerParams(0.5, 0, 2, AtomMeasure.of([(0.5, 1.0)])), FellerParams(1, 2, 0, AtomMeasure.of([(1.5, 0.5)])),
])
def test_discrete_stage_approaches_boundary_stage(params):
    target = boundary_stage(params).total
    regime = "sojourn" if params.p3 > 0 else "reflection"
    for n in (100, 1000, 10_000):
        got = discrete_stage(build_measure(ScalingScheme(regime, n, params)), n).xi_n
        assert abs(got - target) <= 10 / n * target


def test_discrete_stage_examples():
    m = build_measure(ScalingScheme("sojourn", 10, FellerParams(1, 0, 1)))
    assert discrete_stage(m, 10).xi_n == pytest.approx(0.99, rel=1e-14)
    m = build_measure(ScalingScheme("reflection", 10, FellerParams(1, 1, 0)))
    assert discrete_stage(m, 10).xi_n == pytest.approx(0.81, rel=1e-14)
    m = JumpingMeasure.from_dict({3: 1.0})
    assert discrete_stage(m, 10).xi_n == 0.0
    with pytest.raises(ValueError):
        discrete_stage(JumpingMeasure.from_dict({0: 0.5, 1: 0.5}), 10)


def test_presets():
    r = preset("reflected")
    assert (r.params.p1, r.params.p2, r.params.p3, r.params.p4) == (0, 1, 0, ZERO) and r.regime == "reflection"
    e = preset("elastic", p1=1, p2=1)
    assert (e.params.p1, e.params.p2, e.params.p3) == (1, 1, 0) and e.regime == "reflection"
    s = preset("sticky", p2=1, p3=1)
    assert (s.params.p1, s.params.p2, s.params.p3) == (0, 1, 1) and s.regime == "sojourn"
    assert {preset(name).regime for name in PRESETS} == {"sojourn", "reflection"}
    with pytest.raises(ValueError, match="unknown preset"):
        preset("bouncy")


@pytest.mark.parametrize("n", [2, 3, 10, 57, 1000])
def test_preset_round_trip(n):
    assert build_measure(preset("reflected").scheme(n)) == JumpingMeasure.from_dict({1: 1.0})
    assert build_measure(preset("absorbed").scheme(n)) == JumpingMeasure.from_dict({0: 1.0})


def test_rescale_examples():
    assert rescale(BRWPath((0, 1, 2, 1), 0), 2, 0.5).at(0.5) == 1.0
    assert set(rescale(BRWPath((0,) * 17, 0), 2, 4.0).values) == {0.0}
    killed = BRWPath((0, 1, 0), 0, killed_at=3)
    assert rescale(killed, 2, 1.0).at(1.0) == DELTA
    with pytest.raises(ValueError):
        rescale(BRWPath((0, 1), 0), 2, 1.0)


def test_start_state_examples():
    assert start_state(1.26, 10) == 12
    assert start_state(0.0, 77) == 0
    assert start_state(0.999, 1000) == 999


def test_pure_jump_is_experimental_only():
    p = FellerParams(1, 0, 0, AtomMeasure.of([(0.5, 1.0), (2.0, 2.0)]))
    with pytest.raises(InadmissibleParams):
        build_pure_jump_measure(p, 10)
    m = build_pure_jump_measure(p, 10, experimental=True)
    assert m.kill == pytest.approx(0.25) and m.p(4) == pytest.approx(0.25) and m.p(19) == pytest.approx(0.5)
    with pytest.raises(InadmissibleParams):
        preset("reflected", p2=0.0)
