"""
Terminality tests, rank-2 fan construction and canonical fan keys.
"""

import functools
import logging
from dataclasses import dataclass

import numpy as np

from lib.lattice import (
    as_int_matrix, hermite_normal_form, hull_facets, hull_lattice_points,
    integer_determinant, integer_kernel, kernel_basis, make_primitive,
    simplex_lattice_points,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FanData:
    """
    Complete simplicial fan of a rank-2 toric variety.

    rays is an (N-2) x N exact integer matrix whose column i is the ray of
    coordinate i; each maximal cone is the complement of one pair (i, j) with
    i in I- and j in I+. primitive_kernel is False when some kernel column
    had to be divided by its gcd.
    """

    rays: np.ndarray
    maximal_cones: tuple
    cone_dets: tuple
    primitive_kernel: bool = True

    @property
    def dim(self):
        return self.rays.shape[0]

    @property
    def n_rays(self):
        return self.rays.shape[1]

    def ray_vectors(self):
        return [tuple(int(x) for x in self.rays[:, i]) for i in range(self.n_rays)]


@dataclass(frozen=True)
class NormalFormKey:
    value: bytes

    def hex(self):
        return self.value.hex()


def wps_bound_check(w):
    """
    Necessary condition for terminality: a_i * (N - i + 2) < a for i >= 3.

    Args:
        w: WeightVector with N >= 3

    Returns:
        True when every inequality holds strictly
    """
    n = w.n
    if n < 3:
        raise ValueError('bound check needs N >= 3, got N={}'.format(n))
    a = w.a
    return all(w.weights[j] * (n - j + 1) < a for j in range(2, n))


def wps_is_terminal(w):
    """
    Exact terminality test for P(a_1, ..., a_N).

    For every k in 2..a-2 the fractional parts frac(k*a_i/a) = (k*a_i mod a)/a
    must sum to an integer in {2, ..., N-2}.
    """
    n = w.n
    if n < 3:
        raise ValueError('terminality needs dimension >= 2, got dimension {}'.format(n - 1))
    a = w.a
    if a <= 3:
        return True
    k = np.arange(2, a - 1, dtype=np.int64)
    weights = np.asarray(w.weights, dtype=np.int64)
    sums = (np.outer(k, weights) % a).sum(axis=1) // a
    return bool(np.all((sums >= 2) & (sums <= n - 2)))


def rank2_fan(w):
    """
    Fan of a validated rank-2 weight matrix.

    Rays are the primitive columns of the integer kernel of w.

    Raises:
        ValueError: 'fewer than N rays' when a kernel column vanishes or two
            columns coincide after reduction
    """
    kernel = kernel_basis(w.as_int_matrix())
    n = w.n
    rays = []
    reduced = False
    for i in range(n):
        column = [int(x) for x in kernel[:, i]]
        if not any(column):
            raise ValueError('fewer than N rays: column {} of the kernel vanishes'.format(i))
        ray = make_primitive(column)
        reduced = reduced or list(ray) != column
        rays.append(ray)
    if len(set(rays)) != n:
        raise ValueError('fewer than N rays: {} distinct rays for N={}'.format(len(set(rays)), n))
    ray_matrix = as_int_matrix(rays).T.copy()

    cones = []
    dets = []
    for i in w.i_minus:
        for j in w.i_plus:
            cone = tuple(x for x in range(n) if x not in (i, j))
            cones.append(cone)
            dets.append(abs(integer_determinant(ray_matrix[:, list(cone)])))
    return FanData(rays=ray_matrix, maximal_cones=tuple(cones), cone_dets=tuple(dets),
                   primitive_kernel=not reduced)


def rank2_is_simplicial(f):
    return all(len(c) == f.dim for c in f.maximal_cones) and all(d != 0 for d in f.cone_dets)


def cones_are_terminal(f):
    """
    Per-cone test: no lattice point of conv(0, cone rays) other than the
    origin and the rays. Necessary for rank2_is_terminal.
    """
    vectors = f.ray_vectors()
    origin = tuple([0] * f.dim)
    for cone, det in zip(f.maximal_cones, f.cone_dets):
        if det == 1:
            continue
        rays = [vectors[i] for i in cone]
        expected = {origin, *rays}
        if set(simplex_lattice_points(rays).points) != expected:
            return False
    return True


def rank2_is_terminal(f):
    """
    True iff conv(rays) contains no lattice point besides the origin and the rays.

    Raises:
        ValueError: 'fan not complete' when the origin is not interior
    """
    if not cones_are_terminal(f):
        return False
    vectors = f.ray_vectors()
    expected = {tuple([0] * f.dim), *vectors}
    return set(hull_lattice_points(vectors).points) == expected


def pairing_matrix(f):
    """Lattice distance of every ray from every facet of conv(rays)."""
    vectors = f.ray_vectors()
    facets = hull_facets(vectors)
    return [[facet.offset - sum(a * b for a, b in zip(facet.normal, v)) for v in vectors]
            for facet in facets]


def invariant_hash(f):
    """Cheap isomorphism invariant used before exact key comparison."""
    rows = tuple(sorted(tuple(sorted(row)) for row in pairing_matrix(f)))
    return (f.dim, f.n_rays, tuple(sorted(f.cone_dets)), rows)


def _angular_order(columns):
    """
    Order Gale-dual columns by angle, parallel ones by increasing length.

    All columns lie in an open half-plane, so the sign of the 2x2
    determinant is a consistent comparison.
    """
    def compare(i, j):
        (a1, b1), (a2, b2) = columns[i], columns[j]
        det = a1 * b2 - b1 * a2
        if det > 0:
            return -1
        if det < 0:
            return 1
        return (abs(a1) + abs(b1)) - (abs(a2) + abs(b2))

    order = sorted(range(len(columns)), key=functools.cmp_to_key(compare))
    groups = []
    for i in order:
        if groups:
            j = groups[-1][0]
            (a1, b1), (a2, b2) = columns[i], columns[j]
            if a1 * b2 - b1 * a2 == 0:
                groups[-1].append(i)
                continue
        groups.append([i])
    forward = [i for group in groups for i in group]
    backward = [i for group in reversed(groups) for i in group]
    return forward, backward


def _serialise(h, cones):
    rows, cols = h.shape
    body = ','.join(str(int(x)) for x in h.flatten())
    cone_body = ';'.join(','.join(map(str, c)) for c in cones)
    return '{}x{}:{}|{}'.format(rows, cols, body, cone_body).encode('ascii')


def _relabel_cones(cones, order):
    position = {old: new for new, old in enumerate(order)}
    return sorted(tuple(sorted(position[i] for i in cone)) for cone in cones)


def normal_form_key(f):
    """
    Canonical key of a fan under ray permutation and change of lattice basis.

    The Gale dual of the rays is a 2 x N matrix, unique up to GL(2, Z). Its
    columns sit in an open half-plane, so their angular order is canonical
    up to orientation. The key is the smallest serialised pair of the Hermite
    normal form of the reordered ray matrix and the relabelled maximal cones,
    over the orders of both orientations. A fan built from non-primitive
    kernel columns has cones that the rays alone do not determine.
    """
    gale = integer_kernel(f.rays)
    if gale is None or gale.shape[0] != 2:
        raise ValueError('normal form needs N = dim + 2 rays, got {} rays in dimension {}'
                         .format(f.n_rays, f.dim))
    columns = [(int(gale[0, i]), int(gale[1, i])) for i in range(f.n_rays)]
    candidates = []
    for order in _angular_order(columns):
        h, _ = hermite_normal_form(f.rays[:, order])
        candidates.append(_serialise(h, _relabel_cones(f.maximal_cones, order)))
    return NormalFormKey(value=min(candidates))


def is_admissible(w):
    """
    Run the generation conditions on a validated weight matrix.

    Returns:
        (FanData, True) when the fan has N rays, is simplicial and terminal and
        every kernel column was already primitive; (FanData or None, False)
        otherwise
    """
    try:
        fan = rank2_fan(w)
    except ValueError as err:
        logger.debug('is_admissible: %s', err)
        return None, False
    if not fan.primitive_kernel:
        logger.debug('is_admissible: non-primitive kernel column for %s', w.as_rows())
        return fan, False
    if not rank2_is_simplicial(fan):
        return fan, False
    try:
        return fan, rank2_is_terminal(fan)
    except ValueError as err:
        logger.debug('is_admissible: %s', err)
        return fan, False


class FanDeduplicator:
    """
    Two-tier dedup: fans are bucketed by invariant_hash, and exact keys are
    computed only inside buckets that receive a second fan.
    """

    def __init__(self):
        self._buckets = {}

    def __len__(self):
        return sum(len(bucket) for bucket in self._buckets.values())

    def add(self, fan):
        """Register fan; returns False when an isomorphic fan was seen before."""
        bucket = self._buckets.setdefault(invariant_hash(fan), [])
        if not bucket:
            bucket.append([fan, None])
            return True
        key = normal_form_key(fan).value
        for entry in bucket:
            if entry[1] is None:
                entry[1] = normal_form_key(entry[0]).value
            if entry[1] == key:
                return False
        bucket.append([fan, key])
        return True


def dedup_by_key(fans):
    """
    Args:
        fans: iterable of (item, FanData)

    Returns:
        list of items, keeping the first item of each isomorphism class
    """
    seen = FanDeduplicator()
    return [item for item, fan in fans if seen.add(fan)]
