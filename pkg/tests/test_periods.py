import csv
import math

import numpy as np
import pytest

from lib.periods import (
    ZERO, log_prefix, next_nonzero_index, period_coeffs, rank2_coeffs, wps_coeffs,
    write_log_coeffs_csv,
)
from lib.varieties import block_matrix, validate_rank2, validate_wps

P1P1 = [[1, 1, 0, 0], [0, 0, 1, 1]]


def test_p2_coefficients():
    w = validate_wps([1, 1, 1])
    exact = wps_coeffs(w, 9, 'exact')
    assert exact[0] == 1
    assert exact[3] == 6
    assert exact[6] == 90
    assert exact[9] == 1680
    assert exact[4] == 0
    seq = wps_coeffs(w, 9)
    assert seq.divisor == 3
    assert math.isclose(seq.log_coeffs[6], math.log(90), rel_tol=1e-12)
    assert seq.is_zero(5)
    assert seq.log_coeffs[5] == ZERO


def test_p112_coefficients():
    exact = wps_coeffs(validate_wps([1, 1, 2]), 8, 'exact')
    assert exact[4] == 12
    assert exact[8] == 420
    assert [exact[d] for d in (1, 2, 3, 5, 6, 7)] == [0] * 6


def test_p1p1_coefficients():
    w = validate_rank2(P1P1)
    exact = rank2_coeffs(w, 8, 'exact')
    assert exact[2] == 4
    assert exact[4] == 36
    assert exact[6] == 400
    assert exact[3] == 0
    seq = rank2_coeffs(w, 8)
    assert seq.divisor == 2
    assert math.isclose(seq.log_coeffs[4], math.log(36), rel_tol=1e-12)


def test_p1p1_binomial_square_identity():
    w = validate_rank2(P1P1)
    exact = rank2_coeffs(w, 60, 'exact')
    for m in range(31):
        assert exact[2 * m] == math.comb(2 * m, m) ** 2


def test_block_matrix_coefficients():
    w = validate_wps([1, 1, 2])
    wps = wps_coeffs(w, 60, 'exact')
    block = rank2_coeffs(block_matrix(w), 60, 'exact')
    for d in range(61):
        expected = sum(math.comb(d, 4 * k) * wps[4 * k] for k in range(d // 4 + 1))
        assert block[d] == expected


def agree(seq, exact, d_max):
    for d in range(d_max + 1):
        if exact[d] == 0:
            assert seq.is_zero(d)
            continue
        value = math.log(exact[d])
        assert abs(seq.log_coeffs[d] - value) <= 1e-9 * max(1.0, abs(value))


def test_exact_and_log_agree_wps():
    rng = np.random.default_rng(1)
    checked = 0
    while checked < 10:
        raw = rng.integers(1, 8, size=int(rng.integers(3, 6))).tolist()
        try:
            w = validate_wps(raw)
        except ValueError:
            continue
        agree(wps_coeffs(w, 200), wps_coeffs(w, 200, 'exact'), 200)
        checked += 1


def test_exact_and_log_agree_rank2():
    rng = np.random.default_rng(2)
    checked = 0
    while checked < 6:
        raw = rng.integers(0, 4, size=(2, 5)).tolist()
        try:
            w = validate_rank2(raw)
        except ValueError:
            continue
        agree(rank2_coeffs(w, 120), rank2_coeffs(w, 120, 'exact'), 120)
        checked += 1


def test_rank2_chunking_does_not_change_values():
    w = validate_rank2([[1, 2, 1, 0, 1], [0, 1, 1, 2, 3]])
    whole = rank2_coeffs(w, 300)
    split = rank2_coeffs(w, 300, chunk_size=7)
    parallel = rank2_coeffs(w, 300, n_jobs=2, chunk_size=40)
    np.testing.assert_array_equal(whole.log_coeffs, split.log_coeffs)
    np.testing.assert_array_equal(whole.log_coeffs, parallel.log_coeffs)


def test_period_coeffs_dispatch():
    assert period_coeffs(validate_wps([1, 1, 1]), 6).family == 'wps'
    assert period_coeffs(validate_rank2(P1P1), 6).family == 'rank2'
    with pytest.raises(TypeError):
        period_coeffs([1, 1, 1], 6)


def test_invalid_mode_and_degree():
    w = validate_wps([1, 1, 1])
    with pytest.raises(ValueError, match='mode'):
        wps_coeffs(w, 10, 'float')
    with pytest.raises(ValueError, match='non-negative'):
        wps_coeffs(w, -1)


def test_next_nonzero_index():
    seq = wps_coeffs(validate_wps([1, 1, 2]), 10)
    assert next_nonzero_index(seq, 1) == 4
    assert next_nonzero_index(seq, 4) == 4
    assert next_nonzero_index(seq, 5) == 8
    with pytest.raises(ValueError, match='exhausted'):
        next_nonzero_index(seq, 9)
    with pytest.raises(ValueError, match='outside'):
        next_nonzero_index(seq, 11)


def test_log_prefix_replaces_zeros():
    seq = wps_coeffs(validate_wps([1, 1, 2]), 120)
    prefix = log_prefix(seq)
    assert prefix.shape == (100,)
    assert prefix[0] == 0.0
    assert math.isclose(prefix[3], math.log(12))
    assert np.all(np.isfinite(prefix))
    with pytest.raises(ValueError, match='too short'):
        log_prefix(wps_coeffs(validate_wps([1, 1, 2]), 50))


def test_write_log_coeffs_csv(tmp_path):
    path = tmp_path / 'coeffs.csv'
    write_log_coeffs_csv(path, wps_coeffs(validate_wps([1, 1, 1]), 9))
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['d', 'log_c_d']
    assert [int(r[0]) for r in rows[1:]] == [0, 3, 6, 9]
    assert math.isclose(float(rows[2][1]), math.log(6), rel_tol=1e-12)
