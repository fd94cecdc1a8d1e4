"""
Weighted projective spaces and Picard-rank-2 toric varieties.

Both families are described by their weights: a sorted weight vector for
P(a_1, ..., a_N), a 2 x N non-negative weight matrix for the rank-2 case.
Index sets are 0-based throughout.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from lib.lattice import as_int_matrix, extended_gcd


@dataclass(frozen=True)
class WeightVector:
    """Sorted positive weights a_1 <= ... <= a_N of P(a_1, ..., a_N)."""

    weights: tuple

    @property
    def n(self):
        return len(self.weights)

    @property
    def a(self):
        return sum(self.weights)

    @property
    def dim(self):
        return self.n - 1

    def as_list(self):
        return list(self.weights)


@dataclass(frozen=True)
class ConeC:
    """The cone {(x, y) : a_i x + b_i y >= 0 for every column i}."""

    columns: tuple

    def contains(self, x, y, strict=False):
        values = [a * x + b * y for a, b in self.columns]
        if strict:
            return all(v > 0 for v in values)
        return all(v >= 0 for v in values)

    def boundary_rays(self):
        """
        The two extreme rays of the cone.

        Returns:
            (r_lo, r_hi): r_lo is orthogonal to the steepest column (largest
            b_i/a_i), r_hi to the flattest one; the cone is spanned by them.
        """
        flattest = self.columns[0]
        steepest = self.columns[0]
        for col in self.columns[1:]:
            if _cross(col, flattest) > 0:
                flattest = col
            if _cross(steepest, col) > 0:
                steepest = col
        r_lo = (steepest[1], -steepest[0])
        r_hi = (-flattest[1], flattest[0])
        return r_lo, r_hi


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


@dataclass(frozen=True)
class WeightMatrix:
    """
    2 x N weight matrix with rows (a_1..a_N) and (b_1..b_N).

    Columns keep their input order; canonicalisation happens only when a
    normal form is requested.
    """

    top: tuple
    bottom: tuple

    @property
    def n(self):
        return len(self.top)

    @property
    def a(self):
        return sum(self.top)

    @property
    def b(self):
        return sum(self.bottom)

    @property
    def ell(self):
        return math.gcd(self.a, self.b)

    @property
    def dim(self):
        return self.n - 2

    @property
    def columns(self):
        return tuple(zip(self.top, self.bottom))

    @cached_property
    def imbalance(self):
        """a*b_i - b*a_i per column; its sign decides I+ / I-."""
        a, b = self.a, self.b
        return tuple(a * bi - b * ai for ai, bi in self.columns)

    @property
    def i_plus(self):
        return tuple(i for i, s in enumerate(self.imbalance) if s > 0)

    @property
    def i_minus(self):
        return tuple(i for i, s in enumerate(self.imbalance) if s < 0)

    @property
    def cone(self):
        return ConeC(columns=self.columns)

    def as_rows(self):
        return [list(self.top), list(self.bottom)]

    def as_int_matrix(self):
        return as_int_matrix(self.as_rows())

    def permuted(self, order):
        return WeightMatrix(top=tuple(self.top[i] for i in order),
                            bottom=tuple(self.bottom[i] for i in order))


def validate_wps(raw):
    """
    Validate weights of a weighted projective space.

    Args:
        raw: iterable of positive integers (or a WeightVector)

    Returns:
        WeightVector with the weights sorted ascending
    """
    if isinstance(raw, WeightVector):
        raw = raw.weights
    weights = tuple(sorted(int(x) for x in raw))
    if len(weights) < 2 or any(x <= 0 for x in weights):
        raise ValueError('empty/nonpositive weight: need at least two positive weights, '
                         'got {}'.format(list(weights)))
    for i in range(len(weights)):
        g = math.gcd(*(weights[:i] + weights[i + 1:]))
        if g != 1:
            raise ValueError('not well-formed: gcd of the weights without a_{} is {}'.format(i + 1, g))
    return WeightVector(weights=weights)


def validate_rank2(raw):
    """
    Validate a 2 x N weight matrix of a Picard-rank-2 toric variety.

    Args:
        raw: two rows of non-negative integers (or a WeightMatrix)

    Returns:
        WeightMatrix with no zero column, no column parallel to (a, b) and
        at least two columns on each side of (a, b)
    """
    if isinstance(raw, WeightMatrix):
        raw = raw.as_rows()
    rows = [[int(x) for x in row] for row in raw]
    if len(rows) != 2 or len(rows[0]) != len(rows[1]):
        raise ValueError('weight matrix must have two rows of equal length')
    if any(x < 0 for row in rows for x in row):
        raise ValueError('weight matrix entries must be non-negative')
    w = WeightMatrix(top=tuple(rows[0]), bottom=tuple(rows[1]))
    for i, (ai, bi) in enumerate(w.columns):
        if ai == 0 and bi == 0:
            raise ValueError('zero column at index {}'.format(i))
    parallel = [i for i, s in enumerate(w.imbalance) if s == 0]
    if parallel:
        raise ValueError('(a,b) parallel to a column: index {}'.format(parallel[0]))
    if len(w.i_plus) < 2 or len(w.i_minus) < 2:
        raise ValueError('S± too small: |I+|={}, |I-|={}'.format(len(w.i_plus), len(w.i_minus)))
    return w


def _line_parameters(w, d):
    """
    Parametrise the points of the line a*k + b*l = d inside the cone C.

    Returns:
        (k0, l0, t_lo, t_hi) with points (k0 + t*b/ell, l0 - t*a/ell) for
        t_lo <= t <= t_hi, or None when the line carries no lattice point of C
    """
    if d < 0:
        raise ValueError('degree must be non-negative, got {}'.format(d))
    ell = w.ell
    if d % ell:
        return None
    _, x, y = extended_gcd(w.a, w.b)
    k0, l0 = x * (d // ell), y * (d // ell)
    t_lo, t_hi = None, None
    for (ai, bi), s in zip(w.columns, w.imbalance):
        r = ai * k0 + bi * l0
        g = -s // ell
        if g > 0:
            bound = -(r // g)
            t_lo = bound if t_lo is None else max(t_lo, bound)
        elif g < 0:
            bound = r // (-g)
            t_hi = bound if t_hi is None else min(t_hi, bound)
        elif r < 0:
            return None
    if t_lo is None or t_hi is None:
        raise ValueError('cone C is not pointed: the line has infinitely many points')
    if t_lo > t_hi:
        return None
    return k0, l0, t_lo, t_hi


def rank2_line_arrays(w, d):
    """Vectorised rank2_line_points: (k, l) as int64 arrays, ascending in k."""
    params = _line_parameters(w, d)
    if params is None:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    k0, l0, t_lo, t_hi = params
    t = np.arange(t_lo, t_hi + 1, dtype=np.int64)
    return k0 + t * (w.b // w.ell), l0 - t * (w.a // w.ell)


def rank2_line_points(w, d):
    """
    Integer points (k, l) of C on the line a*k + b*l = d.

    Args:
        w: validated WeightMatrix
        d: degree >= 0

    Returns:
        list of (k, l) pairs ascending in k, empty when ell does not divide d
    """
    params = _line_parameters(w, d)
    if params is None:
        return []
    k0, l0, t_lo, t_hi = params
    step_k, step_l = w.b // w.ell, -w.a // w.ell
    return [(k0 + t * step_k, l0 + t * step_l) for t in range(t_lo, t_hi + 1)]


def block_matrix(w):
    """
    The matrix [[a_1..a_N, 0], [0..0, 1]] of a weight vector.

    It fails validate_rank2 (|I+| = 1) and is returned unvalidated; its
    coefficients are sum_k binom(d, a*k) * c_{a*k} of P(a_1, ..., a_N).
    """
    return WeightMatrix(top=tuple(w.weights) + (0,), bottom=(0,) * w.n + (1,))
