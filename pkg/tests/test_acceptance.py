"""Acceptance suite.  Each test prints one ``PASS``/``FAIL`` line; run with
``pytest -s tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np

from fellerlab.boundary import AtomMeasure
from fellerlab.brw import JumpingMeasure, enumerate_exact, first_passage_time
from fellerlab.genfun import catalan_first_passage, f_closed, f_series, occupation_bound, tail_bound
from fellerlab.generator import (
    consistency_residuals, generator_bounds_check, make_domain_function, martingale_residual,
)
from fellerlab.harness import (
    ExperimentConfig, departure_window_check, ks_statistic, occupation_scaling, positive_part, run_convergence,
)
from fellerlab.reference import absorbed_marginal, endpoint_sample, fine_grid_reference
from fellerlab.scaling import ScalingScheme, build_measure, preset

X_GRID = [k / 10 for k in range(1, 10)]
LAMBDAS = [(1.0, 2.0), (0.5, 3.0), (2.0, 5.0)]
SOJOURN_PRESETS = ["absorbed", "exponential_holding", "sticky", "mixed"]
REFLECTION_PRESETS = ["reflected", "elastic"]


def report(number, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


def random_measure(rng):
    size = int(rng.integers(1, 52))
    w = rng.random(size) * (rng.random(size) < 0.6)
    kill = rng.random() * (rng.random() < 0.5)
    if w.sum() + kill == 0:
        w[-1] = 1.0
    tot = w.sum() + kill
    return JumpingMeasure(w / tot, kill / tot)


def test_criterion_1_generating_function():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = -np.inf
    for _ in range(20):
        m = random_measure(rng)
        series = f_series(m, 400)
        for x in X_GRID:
            worst = max(worst, abs(f_closed(m, x) - series.partial_sum(x)) - tail_bound(x, 400))
    elapsed = time.perf_counter() - start
    report(1, worst <= 1e-9 and elapsed < 5,
           f"max excess over tail bound {worst:.3e} (<= 1e-9), {elapsed:.2f}s (< 5s)")


def test_criterion_2_first_passage():
    start = time.perf_counter()
    mismatches = [(i, j) for i in range(1, 5) for j in range(1, 17)
                  if catalan_first_passage(i, j) != first_passage_time(i, j)]
    elapsed = time.perf_counter() - start
    report(2, not mismatches and elapsed < 10, f"{len(mismatches)} mismatches over i<=4, j<=16, {elapsed:.2f}s (< 10s)")


def test_criterion_3_martingale_identity():
    start = time.perf_counter()
    worst, cases = 0.0, 0
    for name in ("mixed", "elastic", "reflected"):
        p = preset(name)
        m = build_measure(p.scheme(10))
        for l1, l2 in LAMBDAS:
            tf = make_domain_function(p.params, l1, l2)
            for s in (0, 1, 2):
                for steps in range(11):
                    worst = max(worst, abs(martingale_residual(m, s, tf, 10, steps)))
                    cases += 1
    elapsed = time.perf_counter() - start
    report(3, worst <= 1e-12 and elapsed < 60, f"max |E M_m| {worst:.2e} over {cases} cases, {elapsed:.2f}s (< 60s)")


def test_criterion_4_occupation_bound():
    measures = []
    for name in REFLECTION_PRESETS:
        for n in (10, 100):
            measures.append(build_measure(preset(name).scheme(n)))
    measures += [JumpingMeasure.from_dict({1: 1.0}), JumpingMeasure.from_dict({3: 0.5, 7: 0.5}),
                 JumpingMeasure.from_dict({1: 0.25, 50: 0.25}, kill=0.5)]
    violations = 0
    for m in measures:
        assert m.p(0) == 0
        series = f_series(m, 10_000)
        violations += sum(series.occupation(k) > occupation_bound(k) for k in (10, 100, 1000, 10_000))
    report(4, violations == 0, f"{violations} violations over {len(measures)} measures, m in 10..1e4")


def test_criterion_5_generator_bounds():
    violations, checks = 0, 0
    for name in SOJOURN_PRESETS + REFLECTION_PRESETS:
        p = preset(name)
        for l1, l2 in LAMBDAS:
            tf = make_domain_function(p.params, l1, l2)
            for n in (10, 100):
                rep = generator_bounds_check(p.scheme(n), tf)
                violations += not rep.interior_ok
                checks += rep.states_checked
    residual_ok = True
    details = []
    for name in SOJOURN_PRESETS + REFLECTION_PRESETS:
        p = preset(name)
        tf = make_domain_function(p.params, 1.0, 2.0)
        r = consistency_residuals(p.params, p.regime, tf, [10_000])[0]
        limit = 1e-3 * tf.sup_norms.f2 if p.regime == "sojourn" else 1e-3
        residual_ok &= abs(r.boundary) <= limit
        details.append(f"{name}={r.boundary:.1e}")
    report(5, violations == 0 and residual_ok,
           f"{violations} interior violations over {checks} states; boundary at n=1e4: {', '.join(details)}")


def test_criterion_6_reflected_convergence():
    start = time.perf_counter()
    rep = run_convergence(ExperimentConfig(x0=0.0, t_list=(1.0,), n_list=(20, 100), paths=20_000, seed=7,
                                           preset="reflected"))
    elapsed = time.perf_counter() - start
    ks20, ks100 = (r.statistic_value for r in rep.rows)
    report(6, ks100 <= 0.03 and ks100 < ks20 and elapsed <= 120,
           f"KS(n=20)={ks20:.4f}, KS(n=100)={ks100:.4f} (<= 0.03), {elapsed:.1f}s")


def test_criterion_7_absorbed_convergence():
    p = preset("absorbed")
    sample, _ = endpoint_sample(p.params, p.regime, 1.0, 1.0, 50, 20_000, seed=7)
    atom = sample.zero_fraction
    ks = ks_statistic(positive_part(sample), absorbed_marginal(1.0, 1.0, killed=True)).statistic
    report(7, abs(atom - 0.3173) <= 0.02 and ks <= 0.03, f"mass at 0 {atom:.4f} (ref 0.3173), positive-part KS {ks:.4f}")


def test_criterion_8_exponential_holding():
    p = preset("exponential_holding")
    sample, _ = endpoint_sample(p.params, p.regime, 0.0, 1.0, 100, 20_000, seed=7)
    alive = 1 - sample.kill_fraction
    report(8, abs(alive - math.exp(-1)) <= 0.02, f"survival {alive:.4f} vs e^-1 = {math.exp(-1):.4f}")


def test_criterion_9_self_convergence():
    p = preset("elastic")
    kill100 = endpoint_sample(p.params, p.regime, 1.0, 1.0, 100, 20_000, seed=7)[0].kill_fraction
    kill_ref = fine_grid_reference(p.params, p.regime, 1.0, 1.0, 400, 20_000, seed=8, largest_n=100).law.kill_mass
    sticky = occupation_scaling("sticky", [100], 1.0, 20_000, seed=7)[0].rescaled_occupation
    s = preset("sticky")
    sticky_ref = fine_grid_reference(s.params, s.regime, 0.0, 1.0, 400, 20_000, seed=8, largest_n=100).occupation.mean
    reflected = occupation_scaling("reflected", [100], 1.0, 20_000, seed=7)[0].rescaled_occupation
    ok = abs(kill100 - kill_ref) <= 0.02 and abs(sticky - sticky_ref) <= 0.02 and sticky >= 5 * reflected
    report(9, ok, f"elastic kill {kill100:.4f} vs {kill_ref:.4f}; sticky occupation {sticky:.4f} vs {sticky_ref:.4f}; "
                  f"reflected occupation {reflected:.4f}")


def test_criterion_10_jump_departures():
    p = preset("sticky", p4=AtomMeasure.of([(2.0, 1.0)]))
    parts, ok = [], True
    for n in (50, 100):
        chk = departure_window_check(p.params, p.regime, n, 0.0, 1.0, 20_000, seed=11)
        ok &= chk.within_3sigma
        parts.append(f"n={n}: {chk.observed:.6f} vs {chk.expected:.6f} (z={chk.z:+.2f})")
    report(10, ok, "; ".join(parts))


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failed += 1
    raise SystemExit(1 if failed else 0)
