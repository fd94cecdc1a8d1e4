"""
Regularized quantum period coefficients c_d.

Weighted projective space P(a_1..a_N):
    c_{ak} = (ak)! / prod_i (a_i k)!, zero when a does not divide d.
Rank-2 toric variety with weight matrix (a_i; b_i):
    c_d = sum over integer (k, l) in C with ak + bl = d of
          (ak + bl)! / prod_i (a_i k + b_i l)!

Log mode works in double precision via log-gamma; exact mode uses Python
big integers.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.special import gammaln, logsumexp

from lib.varieties import WeightMatrix, WeightVector, rank2_line_arrays

logger = logging.getLogger(__name__)

# log of a zero coefficient
ZERO = -np.inf

MODES = ('exact', 'log')


@dataclass(eq=False)
class PeriodSequence:
    """log c_d for 0 <= d <= d_max; zero coefficients hold ZERO."""

    d_max: int
    log_coeffs: np.ndarray
    divisor: int
    family: str

    def is_zero(self, d):
        return bool(np.isneginf(self.log_coeffs[d]))

    def nonzero_indices(self, lo=0, hi=None):
        hi = self.d_max if hi is None else min(hi, self.d_max)
        window = self.log_coeffs[lo:hi + 1]
        return np.flatnonzero(np.isfinite(window)) + lo


@dataclass(frozen=True)
class ExactPrefix:
    """c_0..c_m as Python integers."""

    coeffs: tuple

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, d):
        return self.coeffs[d]

    def log(self, d):
        c = self.coeffs[d]
        return math.log(c) if c else ZERO


def _factorials(n):
    table = [1] * (n + 1)
    for i in range(2, n + 1):
        table[i] = table[i - 1] * i
    return table


def _check_mode(mode, d_max):
    if mode not in MODES:
        raise ValueError('mode must be one of {}, got {!r}'.format(MODES, mode))
    if d_max < 0:
        raise ValueError('d_max must be non-negative, got {}'.format(d_max))


def wps_coeffs(w, d_max, mode='log'):
    """
    Period coefficients of P(a_1, ..., a_N).

    Args:
        w: validated WeightVector
        d_max: last degree to compute
        mode: 'log' for a PeriodSequence, 'exact' for an ExactPrefix

    Returns:
        PeriodSequence or ExactPrefix covering 0..d_max
    """
    _check_mode(mode, d_max)
    a = w.a
    ks = np.arange(0, d_max // a + 1)
    if mode == 'exact':
        facts = _factorials(d_max)
        coeffs = [0] * (d_max + 1)
        for k in ks.tolist():
            denominator = 1
            for ai in w.weights:
                denominator *= facts[ai * k]
            coeffs[a * k] = facts[a * k] // denominator
        return ExactPrefix(coeffs=tuple(coeffs))

    log_coeffs = np.full(d_max + 1, ZERO)
    weights = np.asarray(w.weights, dtype=np.float64)
    terms = gammaln(a * ks + 1.0) - gammaln(np.outer(ks, weights) + 1.0).sum(axis=1)
    log_coeffs[a * ks] = terms
    log_coeffs[0] = 0.0
    return PeriodSequence(d_max=d_max, log_coeffs=log_coeffs, divisor=a, family='wps')


def _rank2_log_chunk(w, degrees):
    top = np.asarray(w.top, dtype=np.float64)
    bottom = np.asarray(w.bottom, dtype=np.float64)
    out = np.full(len(degrees), ZERO)
    for idx, d in enumerate(degrees):
        k, l = rank2_line_arrays(w, d)
        if k.size == 0:
            continue
        m = np.outer(k, top) + np.outer(l, bottom)
        terms = gammaln(d + 1.0) - gammaln(m + 1.0).sum(axis=1)
        out[idx] = logsumexp(terms)
    return out


def rank2_coeffs(w, d_max, mode='log', n_jobs=1, chunk_size=2000):
    """
    Period coefficients of a rank-2 toric variety.

    Terms on each line are summed ascending in k; degree chunks are
    independent, so n_jobs > 1 splits them across joblib workers without
    changing any value.

    Args:
        w: validated WeightMatrix
        d_max: last degree to compute
        mode: 'log' or 'exact'
        n_jobs: joblib workers for log mode
        chunk_size: degrees per joblib task

    Returns:
        PeriodSequence or ExactPrefix covering 0..d_max
    """
    _check_mode(mode, d_max)
    ell = w.ell
    if mode == 'exact':
        facts = _factorials(d_max)
        coeffs = [0] * (d_max + 1)
        for d in range(0, d_max + 1, ell):
            k, l = rank2_line_arrays(w, d)
            total = 0
            for kk, ll in zip(k.tolist(), l.tolist()):
                denominator = 1
                for ai, bi in w.columns:
                    denominator *= facts[ai * kk + bi * ll]
                total += facts[d] // denominator
            coeffs[d] = total
        return ExactPrefix(coeffs=tuple(coeffs))

    degrees = list(range(0, d_max + 1, ell))
    chunks = [degrees[i:i + chunk_size] for i in range(0, len(degrees), chunk_size)]
    if n_jobs == 1 or len(chunks) <= 1:
        parts = [_rank2_log_chunk(w, chunk) for chunk in chunks]
    else:
        parts = Parallel(n_jobs=n_jobs)(delayed(_rank2_log_chunk)(w, chunk) for chunk in chunks)
    log_coeffs = np.full(d_max + 1, ZERO)
    if degrees:
        log_coeffs[np.asarray(degrees)] = np.concatenate(parts)
    logger.debug('rank2_coeffs: d_max=%d, %d nonzero', d_max, int(np.isfinite(log_coeffs).sum()))
    return PeriodSequence(d_max=d_max, log_coeffs=log_coeffs, divisor=ell, family='rank2')


def period_coeffs(variety, d_max, mode='log', n_jobs=1):
    """Dispatch on the variety family."""
    if isinstance(variety, WeightVector):
        return wps_coeffs(variety, d_max, mode)
    if isinstance(variety, WeightMatrix):
        return rank2_coeffs(variety, d_max, mode, n_jobs=n_jobs)
    raise TypeError('expected WeightVector or WeightMatrix, got {}'.format(type(variety).__name__))


def next_nonzero_index(seq, d):
    """
    Smallest d' >= d with c_{d'} != 0.

    Raises:
        ValueError: 'exhausted' when no such d' <= d_max exists
    """
    if d < 0 or d > seq.d_max:
        raise ValueError('degree {} outside 0..{}'.format(d, seq.d_max))
    hits = seq.nonzero_indices(d)
    if hits.size == 0:
        raise ValueError('exhausted: no nonzero coefficient in {}..{}'.format(d, seq.d_max))
    return int(hits[0])


def log_prefix(seq, length=100):
    """log c_1..log c_length with zero coefficients replaced by 0.0."""
    if seq.d_max < length:
        raise ValueError('sequence too short for a prefix of {}: d_max={}'.format(length, seq.d_max))
    values = seq.log_coeffs[1:length + 1].copy()
    values[np.isneginf(values)] = 0.0
    return values


def write_log_coeffs_csv(path, seq):
    """Write rows 'd,log_c_d', skipping zero coefficients."""
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['d', 'log_c_d'])
        for d in seq.nonzero_indices().tolist():
            writer.writerow([d, repr(float(seq.log_coeffs[d]))])
