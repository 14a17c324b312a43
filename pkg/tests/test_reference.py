import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fellerlab.harness import ks_statistic
from fellerlab.reference import (
    EmpiricalSample, absorbed_density, absorbed_marginal, exp_holding_survival, export_cdf_csv,
    fine_grid_reference, reflected_marginal,
)
from fellerlab.scaling import preset


def Phi(z):
    return 0.5 * math.erfc(-z / math.sqrt(2))


def test_normal_cdf_accuracy():
    law = reflected_marginal(0.0, 1.0)
    mpmath.mp.dps = 40
    for y in np.linspace(0, 8, 161):
        exact = float(2 * mpmath.ncdf(y) - 1)
        assert abs(float(law.cdf(y)) - exact) <= 1e-15


def test_reflected_examples():
    assert float(reflected_marginal(0, 1).cdf(1.0)) == pytest.approx(2 * Phi(1) - 1, abs=1e-15)
    assert float(reflected_marginal(0, 1).cdf(1.0)) == pytest.approx(0.6827, abs=1e-4)
    assert float(reflected_marginal(0, 3.7).cdf(0.0)) == 0.0
    assert float(reflected_marginal(5, 1e-12).cdf(5.0)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        reflected_marginal(0, 0)


@given(st.floats(0, 20), st.floats(0.01, 10))
def test_reflected_from_zero_is_folded_normal(y, t):
    assert float(reflected_marginal(0, t).cdf(y)) == pytest.approx(2 * Phi(y / math.sqrt(t)) - 1, abs=1e-12)


def test_absorbed_examples():
    assert absorbed_marginal(1, 1).atom_at_zero == pytest.approx(math.erfc(1 / math.sqrt(2)), abs=1e-16)
    assert absorbed_marginal(1, 1).atom_at_zero == pytest.approx(0.3173, abs=1e-4)
    assert absorbed_marginal(0, 1).atom_at_zero == 1.0
    assert absorbed_marginal(3, 0.01).atom_at_zero < 1e-100


@pytest.mark.parametrize("x0,t", [(1, 1), (0.3, 2), (2, 0.5)])
def test_absorbed_total_mass(x0, t):
    law = absorbed_marginal(x0, t)
    mass = integrate.quad(absorbed_density(x0, t), 0, np.inf, epsabs=1e-13)[0]
    assert law.atom_at_zero + mass == pytest.approx(1.0, abs=1e-10)
    assert float(law.cdf(0.0)) == pytest.approx(law.atom_at_zero, abs=1e-15)
    y = 0.8
    assert float(law.cdf(y)) == pytest.approx(law.atom_at_zero + integrate.quad(absorbed_density(x0, t), 0, y)[0], abs=1e-12)


def test_killed_relabelling():
    law = absorbed_marginal(1, 1, killed=True)
    assert law.atom_at_zero == 0.0 and law.kill_mass == pytest.approx(absorbed_marginal(1, 1).atom_at_zero)
    assert float(law.cdf(0.0)) == pytest.approx(0.0, abs=1e-15)
    assert float(law.cdf(1e3)) + law.kill_mass == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("law", [reflected_marginal(0.5, 1), absorbed_marginal(1, 2), absorbed_marginal(1, 2, killed=True)])
def test_law_invariants(law):
    y = np.linspace(0, 30, 3001)
    v = law.cdf(y)
    assert np.all(np.diff(v) >= -1e-16)
    assert v[-1] + law.kill_mass == pytest.approx(1.0, abs=1e-15)
    assert float(law.cdf(0.0)) == pytest.approx(law.atom_at_zero, abs=1e-15)


def test_exp_holding_examples():
    assert exp_holding_survival(1, 1, 1) == pytest.approx(0.3679, abs=1e-4)
    assert exp_holding_survival(1, 1, 0) == 1.0
    assert exp_holding_survival(2, 1, 1) == pytest.approx(math.exp(-2), rel=1e-15)
    with pytest.raises(ValueError):
        exp_holding_survival(0, 1, 1)


def test_empirical_sample_bookkeeping():
    s = EmpiricalSample.from_values([0.0, 0.0, 1.0, 3.0], killed=4)
    assert s.total == 8 and s.kill_fraction == 0.5 and s.zero_fraction == 0.25
    assert float(s.cdf(1.0)) == 0.375 and float(s.cdf_left(1.0)) == 0.25
    with pytest.raises(ValueError):
        EmpiricalSample.from_values([])


def test_fine_grid_reflected_matches_closed_form():
    p = preset("reflected")
    ks = []
    for n_ref in (100, 200, 400):
        ref = fine_grid_reference(p.params, p.regime, 0.0, 1.0, n_ref, 100_000, seed=17)
        ks.append(ks_statistic(ref.sample, reflected_marginal(0, 1)).statistic)
    assert ks[0] > ks[1] > ks[2]
    assert ks[2] <= 0.01


def test_fine_grid_reference_requires_resolution():
    p = preset("elastic")
    with pytest.raises(ValueError):
        fine_grid_reference(p.params, p.regime, 1.0, 1.0, 300, 1000, seed=1, largest_n=100)
    ref = fine_grid_reference(p.params, p.regime, 1.0, 1.0, 40, 2000, seed=1, largest_n=10)
    assert 0 < ref.law.kill_mass < 1 and ref.law.name == "fine_grid(n=40)"


def test_export_csv(tmp_path):
    path = tmp_path / "cdf.csv"
    export_cdf_csv(reflected_marginal(0, 1), [0.0, 1.0], path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# fellerlab-cdf/1 law=reflected")
    assert lines[1] == "y,cdf" and lines[3].startswith("1.0,0.68268949")
