"""
Regression features of a period sequence.

A linear model is fitted to the points (d, log c_d); its slope and
intercept, optionally followed by log c_1..log c_100, are the classifier
features.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from lib.periods import log_prefix, next_nonzero_index

logger = logging.getLogger(__name__)

PREFIX_LENGTH = 100


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    se_slope: float
    se_intercept: float
    n_points: int
    window: tuple = None


@dataclass(frozen=True)
class SamplingPolicy:
    """
    Which degrees feed the fit.

    kind 'all' uses every nonzero coefficient with 1 <= d <= max_degree;
    kind 'grid' walks lo, lo+stride, ..., hi and snaps each sample to the
    next nonzero coefficient.
    """

    kind: str
    max_degree: int = None
    window: tuple = None

    @classmethod
    def wps(cls, max_degree):
        return cls(kind='all', max_degree=max_degree)

    @classmethod
    def grid(cls, lo, hi, stride):
        if lo < 0 or hi < lo or stride < 1:
            raise ValueError('invalid window {}:{}:{}'.format(lo, hi, stride))
        return cls(kind='grid', window=(lo, hi, stride))


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    label: int

    def __post_init__(self):
        if len(self.values) not in (2, 2 + PREFIX_LENGTH):
            raise ValueError('feature vector must have length 2 or {}, got {}'
                             .format(2 + PREFIX_LENGTH, len(self.values)))
        if not 1 <= self.label <= 10:
            raise ValueError('label must be a dimension in 1..10, got {}'.format(self.label))


def ols_fit(points, window=None):
    """
    Ordinary least squares on (d, y) pairs.

    Standard errors use the unbiased residual variance s^2 = RSS / (n - 2):
        se_slope^2 = s^2 / Sxx,  se_intercept^2 = s^2 * (1/n + mean(d)^2 / Sxx)

    Raises:
        ValueError: fewer than 3 points, or 'degenerate design' when every d is equal
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError('ols_fit needs at least 3 points, got {}'.format(len(points)))
    x, y = pts[:, 0], pts[:, 1]
    if np.ptp(x) == 0:
        raise ValueError('degenerate design: all d equal to {}'.format(x[0]))
    result = linregress(x, y)
    return LinearFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        se_slope=float(result.stderr),
        se_intercept=float(result.intercept_stderr),
        n_points=int(x.size),
        window=window,
    )


def sample_degrees(seq, policy):
    """Degrees used by extract_features, in increasing order."""
    if policy.kind == 'all':
        hi = seq.d_max if policy.max_degree is None else policy.max_degree
        return [int(d) for d in seq.nonzero_indices(1, hi)]
    if policy.kind != 'grid':
        raise ValueError('unknown sampling policy {!r}'.format(policy.kind))
    lo, hi, stride = policy.window
    degrees = []
    for d in range(lo, hi + 1, stride):
        if d > seq.d_max:
            break
        try:
            snapped = next_nonzero_index(seq, d)
        except ValueError:
            break
        if not degrees or snapped != degrees[-1]:
            degrees.append(snapped)
    return degrees


def extract_features(seq, policy):
    """Fit log c_d against d over the degrees selected by policy."""
    degrees = sample_degrees(seq, policy)
    if len(degrees) < 3:
        raise ValueError('fewer than 3 usable points for policy {}'.format(policy))
    points = [(d, float(seq.log_coeffs[d])) for d in degrees]
    logger.debug('extract_features: %d points in %d..%d', len(points), degrees[0], degrees[-1])
    window = policy.window if policy.kind == 'grid' else (1, policy.max_degree or seq.d_max, 1)
    return ols_fit(points, window=window)


def feature_vector_102(seq, fit, label):
    """[slope, intercept, v_1..v_100] with v_d = log c_d, or 0.0 when c_d = 0."""
    values = np.concatenate([[fit.slope, fit.intercept], log_prefix(seq, PREFIX_LENGTH)])
    return FeatureVector(values=values, label=int(label))


def write_features_csv(path, rows):
    """
    One row per variety.

    Args:
        path: output CSV path
        rows: iterable of (kind, dim, LinearFit)
    """
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['kind', 'dim', 'slope', 'intercept', 'se_slope', 'se_int'])
        for kind, dim, fit in rows:
            writer.writerow([kind, dim, repr(fit.slope), repr(fit.intercept),
                             repr(fit.se_slope), repr(fit.se_intercept)])
