import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asymsim.calibration import CalibrationMap, calibrate, pool_adjacent_violators

from oracles import isotonic_brute_force


def test_identity_map_before_fit():
    m = CalibrationMap()
    assert float(m(0.5)) == 3.0
    assert float(m(1.0)) == 5.0 and float(m(0.0)) == 1.0


def test_four_point_example_matches_exhaustive_oracle():
    raw = [0.2, 0.8, 0.5, 0.6]
    gold = [1.0, 5.0, 5.0, 1.0]
    m = calibrate(raw, gold)
    order = np.argsort(raw)
    expect = isotonic_brute_force([gold[i] for i in order])
    np.testing.assert_allclose(m(np.array(raw)[order]), expect, atol=1e-12)
    np.testing.assert_allclose(expect, [1.0, 3.0, 3.0, 5.0])


def test_monotone_points_are_fixed():
    m = calibrate([0.1, 0.4, 0.9], [1.0, 3.0, 5.0])
    np.testing.assert_allclose(m(np.array([0.1, 0.4, 0.9])), [1.0, 3.0, 5.0])


def test_constant_gold_gives_constant_map():
    m = calibrate([0.1, 0.7, 0.3], [3.0, 3.0, 3.0])
    assert np.all(m(np.linspace(0, 1, 11)) == 3.0)


def test_tied_raw_scores_are_pooled():
    m = calibrate([0.5, 0.5, 0.9], [1.0, 5.0, 5.0])
    assert float(m(0.5)) == 3.0


def test_needs_two_points():
    with pytest.raises(ValueError):
        calibrate([0.5], [3.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=8),
       st.integers(0, 1000))
def test_pav_matches_exhaustive_oracle(y, seed):
    w = np.random.default_rng(seed).uniform(0.5, 2.0, size=len(y))
    np.testing.assert_allclose(pool_adjacent_violators(y, w), isotonic_brute_force(y, w),
                               atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.sampled_from([1.0, 3.0, 5.0])),
                min_size=2, max_size=30))
def test_calibrated_map_monotone_and_bounded(points):
    raw, gold = zip(*points)
    m = calibrate(raw, gold)
    out = m(np.linspace(0, 1, 101))
    assert np.all(np.diff(out) >= 0)
    assert np.all((out >= 1.0) & (out <= 5.0))
