import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensorfdi import (
    BbaParams,
    ReliabilityParams,
    assign_bbm,
    calibrate_reliability_threshold,
    calibrate_threshold,
    no_fault_weight,
    reliability,
)

LN3 = math.log(3.0)


@pytest.fixture
def params():
    return BbaParams.from_threshold(0.24)


class TestBbaParams:
    def test_default_slope_and_decay(self, params):
        assert params.slope == pytest.approx(-20.0 * LN3 / 0.24)
        assert params.angle_decay == pytest.approx(math.log(2.0) / 90.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            BbaParams(angle_decay=0.0, slope=-1.0, threshold=0.1)
        with pytest.raises(ValueError):
            BbaParams(angle_decay=0.01, slope=1.0, threshold=0.1)
        with pytest.raises(ValueError):
            BbaParams(angle_decay=0.01, slope=-1.0, threshold=0.0)


class TestAssignBbm:
    def test_no_fault_anchor_below_threshold(self, params):
        # 90% of the threshold maps to a no-fault mass of 0.9
        masses = assign_bbm(np.zeros(8), 0.9 * params.threshold, params)
        assert masses[-1] == pytest.approx(0.9, abs=1e-9)

    def test_no_fault_weight_anchor_above_threshold(self, params):
        assert no_fault_weight(1.1 * params.threshold, params) == pytest.approx(0.1, abs=1e-9)

    def test_ninety_degrees_zeroes_fault_mass(self, params):
        d = np.array([90.0, 0.0, 0.0])
        masses = assign_bbm(d, 2.0 * params.threshold, params)
        assert masses[0] < 1e-12

    def test_deep_quiet_is_almost_pure_no_fault(self, params):
        masses = assign_bbm(np.full(4, 45.0), 0.0, params)
        assert masses[-1] > 1.0 - 1e-8
        fault = masses[:-1]
        assert np.all(fault == fault[0])

    def test_mild_exceedance_with_aligned_distances(self, params):
        # all distances zero: per-sensor raw terms are 1, no-fault weight 0.1
        n_x = 8
        masses = assign_bbm(np.zeros(n_x), 1.1 * params.threshold, params)
        assert masses.sum() == pytest.approx(1.0, abs=1e-9)
        assert masses[-1] == pytest.approx(0.1 / (n_x + 0.1), abs=1e-9)
        assert np.allclose(masses[:-1], 1.0 / (n_x + 0.1), atol=1e-9)

    def test_boundary_belongs_to_quiet_branch(self, params):
        # at |residual| == threshold the fault masses are equal regardless of
        # unequal distances, which identifies the quiet branch
        masses = assign_bbm(np.array([0.0, 30.0, 60.0]), params.threshold, params)
        fault = masses[:-1]
        assert np.all(fault == fault[0])
        assert masses[-1] == pytest.approx(0.5, abs=1e-12)

    def test_branch_continuity_of_no_fault_weight(self, params):
        assert no_fault_weight(params.threshold, params) == pytest.approx(0.5, abs=1e-12)

    def test_fault_mass_strictly_decreasing_in_distance(self, params):
        e = 1.5 * params.threshold
        previous = None
        for d0 in (0.0, 20.0, 45.0, 70.0, 89.0):
            masses = assign_bbm(np.array([d0, 10.0, 10.0]), e, params)
            if previous is not None:
                assert masses[0] < previous
            previous = masses[0]

    def test_no_fault_mass_strictly_decreasing_in_residual(self, params):
        d = np.full(3, 30.0)
        previous = None
        for factor in (1.01, 1.2, 1.5, 2.0, 3.0):
            masses = assign_bbm(d, factor * params.threshold, params)
            if previous is not None:
                assert masses[-1] < previous
            previous = masses[-1]

    @given(
        distances=st.lists(st.floats(min_value=0.0, max_value=90.0), min_size=1, max_size=9),
        residual=st.floats(min_value=-1e6, max_value=1e6),
    )
    @settings(max_examples=200)
    def test_always_a_valid_mass_vector(self, distances, residual):
        params = BbaParams.from_threshold(0.24)
        masses = assign_bbm(np.array(distances), residual, params)
        assert masses.shape == (len(distances) + 1,)
        assert np.all(masses >= 0.0) and np.all(masses <= 1.0)
        assert masses.sum() == pytest.approx(1.0, abs=1e-9)


class TestReliability:
    def test_anchors(self):
        params = ReliabilityParams.from_threshold(2.43)
        th = params.threshold
        assert reliability([0.95 * th], params) == pytest.approx(0.9, abs=1e-9)
        assert reliability([th], params) == pytest.approx(0.5, abs=1e-9)
        assert reliability([1.05 * th], params) == pytest.approx(0.1, abs=1e-9)

    def test_uses_euclidean_norm(self):
        params = ReliabilityParams.from_threshold(5.0)
        assert reliability([3.0, 4.0], params) == reliability([5.0], params)

    def test_strictly_decreasing_and_bounded(self):
        params = ReliabilityParams.from_threshold(2.0)
        norms = np.linspace(0.0, 4.0, 50)
        values = [reliability([u], params) for u in norms]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0.0 < v < 1.0 for v in values)

    def test_validation(self):
        with pytest.raises(ValueError):
            ReliabilityParams(slope=-1.0, threshold=1.0)
        with pytest.raises(ValueError):
            ReliabilityParams(slope=1.0, threshold=0.0)


class TestReliabilityThreshold:
    def test_constant_series(self):
        assert calibrate_reliability_threshold([2.0, 2.0, 2.0], 0.1) == 2.0

    def test_uniform_quantile(self, rng):
        norms = rng.uniform(size=10000)
        assert calibrate_reliability_threshold(norms, 0.10) == pytest.approx(0.9, abs=0.02)

    def test_shared_rule_with_detection(self, rng):
        series = rng.exponential(size=321)
        assert calibrate_reliability_threshold(series, 0.07) == calibrate_threshold(series, 0.07)
