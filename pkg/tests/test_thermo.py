import math

import numpy as np
import pytest

from divkit.simplex import ProbVec
from divkit.sufficiency import merge_split_pair, uniformize_tail_pair
from divkit.thermo import (
    BOLTZMANN_K,
    EnergyLevels,
    HeatBath,
    extractable_energy,
    free_energy_identity_gap,
    gibbs_state,
)

# high-precision value of kT * ln(1 + e^-1) for k = 1.381e-23, T = 300
TWO_LEVEL_EX = 1.2978431713879972e-21


def test_boltzmann_constant_value():
    assert BOLTZMANN_K == 1.381e-23


def test_bath_validation():
    with pytest.raises(ValueError):
        HeatBath(0.0)
    with pytest.raises(ValueError):
        HeatBath(-5.0)
    assert HeatBath(300.0).kt == pytest.approx(4.143e-21)


class TestGibbsState:
    def test_equal_levels_give_uniform(self):
        bath = HeatBath(250.0)
        g = gibbs_state(EnergyLevels([3e-21] * 4), bath)
        assert g.w == pytest.approx([0.25] * 4, abs=1e-15)

    def test_two_level_example(self):
        bath = HeatBath(300.0)
        g = gibbs_state(EnergyLevels([0.0, bath.kt]), bath)
        z = 1.0 + math.exp(-1.0)
        assert g.w == pytest.approx([1.0 / z, math.exp(-1.0) / z], abs=1e-12)
        assert g.w == pytest.approx([0.7310586, 0.2689414], abs=1e-7)

    def test_high_temperature_limit(self):
        levels = EnergyLevels([0.0, 1e-21, 2e-21])
        g = gibbs_state(levels, HeatBath(1e12))
        assert np.max(np.abs(g.w - 1.0 / 3.0)) <= 1e-6

    def test_overflow_safety(self):
        # huge level spacings underflow gracefully instead of yielding nan
        bath = HeatBath(1.0)
        g = gibbs_state(EnergyLevels([0.0, 1.0]), bath)
        assert g.w == pytest.approx([1.0, 0.0], abs=1e-15)


class TestExtractableEnergy:
    def test_equal_states(self):
        bath = HeatBath(300.0)
        s = ProbVec([0.4, 0.6])
        assert extractable_energy(s, s, bath) == 0.0

    def test_two_level_example(self):
        bath = HeatBath(300.0)
        g = gibbs_state(EnergyLevels([0.0, bath.kt]), bath)
        ex = extractable_energy(ProbVec([1.0, 0.0]), g, bath)
        assert abs(ex - TWO_LEVEL_EX) <= 1e-25

    def test_nonnegative_zero_iff_equal(self):
        rng = np.random.default_rng(61)
        bath = HeatBath(300.0)
        for _ in range(100):
            dim = int(rng.integers(2, 6))
            s1 = ProbVec(0.9 * rng.dirichlet(np.ones(dim)) + 0.1 / dim)
            s2 = ProbVec(0.9 * rng.dirichlet(np.ones(dim)) + 0.1 / dim)
            assert extractable_energy(s1, s2, bath) > 0.0
            assert extractable_energy(s1, s1, bath) == 0.0

    def test_disjoint_support_infinite(self):
        bath = HeatBath(300.0)
        assert extractable_energy(ProbVec([1, 0]), ProbVec([0, 1]), bath) == math.inf

    def test_sufficiency_transfer(self):
        bath = HeatBath(300.0)
        s1, s2 = ProbVec([0.2, 0.2, 0.6]), ProbVec([0.1, 0.1, 0.8])
        kp = merge_split_pair([[0, 1], [2]], s1, s2)
        t1, t2 = kp.transformed()
        before = extractable_energy(s1, s2, bath)
        after = extractable_energy(t1, t2, bath)
        assert abs(after - before) <= 1e-9 * bath.kt

        q = ProbVec([0.2, 0.3, 0.5])
        kp2 = uniformize_tail_pair(q, 0)
        u1, u2 = kp2.transformed()
        assert abs(
            extractable_energy(u1, u2, bath) - extractable_energy(*kp2.pair, bath)
        ) <= 1e-9 * bath.kt


class TestFreeEnergyIdentity:
    def test_gibbs_state_itself(self):
        bath = HeatBath(300.0)
        levels = EnergyLevels([0.0, 1e-21, 3e-21])
        g = gibbs_state(levels, bath)
        assert free_energy_identity_gap(g, levels, bath) <= 1e-12 * bath.kt

    def test_two_level_dirac(self):
        bath = HeatBath(300.0)
        levels = EnergyLevels([0.0, bath.kt])
        assert free_energy_identity_gap(ProbVec([1, 0]), levels, bath) <= 1e-9 * bath.kt

    def test_random_instances(self):
        rng = np.random.default_rng(62)
        for _ in range(300):
            dim = int(rng.integers(2, 9))
            bath = HeatBath(float(rng.uniform(10.0, 1000.0)))
            levels = EnergyLevels(rng.uniform(0.0, 5.0, size=dim) * bath.kt)
            s = ProbVec(0.9 * rng.dirichlet(np.ones(dim)) + 0.1 / dim)
            assert free_energy_identity_gap(s, levels, bath) <= 1e-9 * bath.kt

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            free_energy_identity_gap(ProbVec([0.5, 0.5]), EnergyLevels([0.0, 1.0, 2.0]), HeatBath(1.0))
