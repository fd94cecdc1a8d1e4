import csv
import math

import numpy as np
import pytest

from lib.features import (
    FeatureVector, SamplingPolicy, extract_features, feature_vector_102, ols_fit, sample_degrees,
    write_features_csv,
)
from lib.periods import rank2_coeffs, wps_coeffs
from lib.varieties import validate_rank2, validate_wps

OUTLIER = [[1, 10, 5, 13, 8, 12, 0], [0, 0, 3, 8, 5, 14, 1]]


def test_ols_fit_standard_errors():
    fit = ols_fit([(0, 0), (1, 1), (2, 0)])
    assert fit.slope == pytest.approx(0.0, abs=1e-15)
    assert fit.intercept == pytest.approx(1 / 3)
    assert fit.se_slope == pytest.approx(1 / math.sqrt(3))
    assert fit.se_intercept == pytest.approx(math.sqrt(5) / 3)
    assert fit.n_points == 3


def test_ols_fit_exact_line():
    fit = ols_fit([(d, 2.5 * d - 4.0) for d in range(1, 20)])
    assert fit.slope == pytest.approx(2.5)
    assert fit.intercept == pytest.approx(-4.0)
    assert fit.se_slope == pytest.approx(0.0, abs=1e-9)


def test_ols_fit_errors():
    with pytest.raises(ValueError, match='at least 3'):
        ols_fit([(0, 1), (1, 2)])
    with pytest.raises(ValueError, match='degenerate design'):
        ols_fit([(5, 1), (5, 2), (5, 3)])


def test_sampling_policy_validation():
    with pytest.raises(ValueError, match='invalid window'):
        SamplingPolicy.grid(-1, 10, 1)
    with pytest.raises(ValueError, match='invalid window'):
        SamplingPolicy.grid(10, 5, 1)


def test_sample_degrees_all_skips_zeros():
    seq = wps_coeffs(validate_wps([1, 1, 2]), 40)
    assert sample_degrees(seq, SamplingPolicy.wps(20)) == [4, 8, 12, 16, 20]


def test_sample_degrees_grid_snaps_forward():
    seq = wps_coeffs(validate_wps([1, 1, 2]), 40)
    # 5 -> 8, 7 -> 8 (duplicate dropped), 9 -> 12, ..., 39 is past the last nonzero
    degrees = sample_degrees(seq, SamplingPolicy.grid(5, 39, 2))
    assert degrees == [8, 12, 16, 20, 24, 28, 32, 36, 40]
    assert degrees == sorted(set(degrees))


def test_sample_degrees_grid_from_zero():
    seq = wps_coeffs(validate_wps([1, 1, 2]), 40)
    assert sample_degrees(seq, SamplingPolicy.grid(0, 12, 4)) == [0, 4, 8, 12]


def test_sample_degrees_grid_stops_at_dmax():
    seq = wps_coeffs(validate_wps([1, 1, 2]), 20)
    assert sample_degrees(seq, SamplingPolicy.grid(4, 100, 4)) == [4, 8, 12, 16, 20]


def test_extract_features_tracks_asymptotics():
    w = validate_wps([1, 1, 1])
    seq = wps_coeffs(w, 3000)
    fit = extract_features(seq, SamplingPolicy.wps(3000))
    # the slope approaches A = log 3 from below because of the -log d term
    assert fit.slope == pytest.approx(math.log(3), abs=5e-3)
    assert fit.slope < math.log(3)
    assert fit.window == (1, 3000, 1)


def test_extract_features_too_few_points():
    seq = wps_coeffs(validate_wps([1, 1, 2]), 10)
    with pytest.raises(ValueError, match='fewer than 3 usable points'):
        extract_features(seq, SamplingPolicy.wps(10))


def test_feature_vector_102():
    seq = wps_coeffs(validate_wps([1, 1, 2]), 200)
    fit = extract_features(seq, SamplingPolicy.wps(200))
    fv = feature_vector_102(seq, fit, 2)
    assert fv.values.shape == (102,)
    assert fv.values[0] == fit.slope
    assert fv.values[2] == 0.0
    assert fv.values[5] == pytest.approx(math.log(12))


def test_feature_vector_checks():
    with pytest.raises(ValueError, match='length'):
        FeatureVector(values=np.zeros(3), label=2)
    with pytest.raises(ValueError, match='label'):
        FeatureVector(values=np.zeros(2), label=11)


def test_write_features_csv(tmp_path):
    fit = ols_fit([(0, 0), (1, 1), (2, 0)])
    path = tmp_path / 'features.csv'
    write_features_csv(path, [('wps', 2, fit)])
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['kind', 'dim', 'slope', 'intercept', 'se_slope', 'se_int']
    assert rows[1][:2] == ['wps', '2']
    assert float(rows[1][3]) == fit.intercept


@pytest.mark.slow
def test_outlier_regression():
    seq = rank2_coeffs(validate_rank2(OUTLIER), 20000)
    fit = extract_features(seq, SamplingPolicy.grid(0, 20000, 100))
    assert fit.slope == pytest.approx(1.637, abs=0.002)
    assert fit.intercept == pytest.approx(-62.64, abs=0.5)
    assert fit.se_slope == pytest.approx(4.246e-4, rel=0.05)
    assert fit.se_intercept == pytest.approx(5.021, rel=0.05)


@pytest.mark.slow
def test_outlier_regression_extended():
    seq = rank2_coeffs(validate_rank2(OUTLIER), 40000)
    fit = extract_features(seq, SamplingPolicy.grid(20000, 40000, 100))
    assert fit.slope == pytest.approx(1.635, abs=0.002)
    assert fit.intercept == pytest.approx(-28.96, abs=0.5)
    assert fit.se_intercept == pytest.approx(0.7877, rel=0.05)
