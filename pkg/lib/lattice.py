"""
Exact integer linear algebra and lattice-point enumeration.

Matrices are numpy arrays with dtype=object, so every entry is a Python int
and no arithmetic ever touches floating point.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatticePointSet:
    """Lattice points of a polytope, stored sorted and without duplicates."""

    dim: int
    points: tuple

    @classmethod
    def from_points(cls, dim, points):
        unique = {tuple(int(x) for x in p) for p in points}
        for p in unique:
            if len(p) != dim:
                raise ValueError('point {} does not have length {}'.format(p, dim))
        return cls(dim=dim, points=tuple(sorted(unique)))

    def __len__(self):
        return len(self.points)

    def __contains__(self, point):
        return tuple(point) in set(self.points)


@dataclass(frozen=True)
class Facet:
    """Supporting hyperplane {x : normal . x = offset} with the vertices on it."""

    normal: tuple
    offset: int
    members: tuple


def as_int_matrix(rows):
    """Convert nested sequences (or a numpy array) into an exact integer matrix."""
    arr = np.asarray(rows, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError('integer matrix needs at least one row and one column')
    out = np.empty(arr.shape, dtype=object)
    for idx, value in np.ndenumerate(arr):
        if isinstance(value, (float, np.floating)) and not float(value).is_integer():
            raise ValueError('non-integer entry {}'.format(value))
        out[idx] = int(value)
    return out


def identity(n):
    m = np.zeros((n, n), dtype=object)
    for i in range(n):
        m[i, i] = 1
    return m


def _swap_rows(m, i, j):
    if i != j:
        m[[i, j]] = m[[j, i]]


def _swap_cols(m, i, j):
    if i != j:
        m[:, [i, j]] = m[:, [j, i]]


def extended_gcd(a, b):
    """
    Extended Euclid.

    Returns:
        (g, x, y) with a*x + b*y = g and g = gcd(a, b) >= 0.
    """
    old_r, r = int(a), int(b)
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def make_primitive(v):
    """Divide an integer vector by the gcd of its entries."""
    entries = [int(x) for x in v]
    g = math.gcd(*entries)
    if g == 0:
        raise ValueError('zero vector has no primitive multiple')
    return tuple(x // g for x in entries)


def integer_determinant(m):
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [[int(x) for x in row] for row in np.asarray(m, dtype=object)]
    n = len(a)
    if n == 0:
        return 1
    if any(len(row) != n for row in a):
        raise ValueError('determinant of a non-square matrix')
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def hermite_normal_form(m):
    """
    Row-style Hermite normal form.

    Args:
        m: integer matrix (anything accepted by as_int_matrix)

    Returns:
        (h, u) with h = u @ m, u unimodular, pivots positive and the entries
        above each pivot reduced into [0, pivot).
    """
    h = as_int_matrix(m).copy()
    rows, cols = h.shape
    u = identity(rows)
    pivot = 0
    for col in range(cols):
        if pivot == rows:
            break
        while True:
            nonzero = [r for r in range(pivot, rows) if h[r, col] != 0]
            if not nonzero:
                break
            best = min(nonzero, key=lambda r: abs(h[r, col]))
            _swap_rows(h, pivot, best)
            _swap_rows(u, pivot, best)
            cleared = True
            for r in range(pivot + 1, rows):
                if h[r, col] != 0:
                    q = h[r, col] // h[pivot, col]
                    h[r] -= q * h[pivot]
                    u[r] -= q * u[pivot]
                    if h[r, col] != 0:
                        cleared = False
            if cleared:
                break
        if h[pivot, col] == 0:
            continue
        if h[pivot, col] < 0:
            h[pivot] = -h[pivot]
            u[pivot] = -u[pivot]
        for r in range(pivot):
            q = h[r, col] // h[pivot, col]
            if q:
                h[r] -= q * h[pivot]
                u[r] -= q * u[pivot]
        pivot += 1
    return h, u


def smith_normal_form(m):
    """
    Smith normal form.

    Returns:
        (d, u, v) with d = u @ m @ v diagonal, d[0,0] | d[1,1] | ..., all
        diagonal entries non-negative and u, v unimodular.
    """
    d = as_int_matrix(m).copy()
    rows, cols = d.shape
    u = identity(rows)
    v = identity(cols)
    for t in range(min(rows, cols)):
        while True:
            entries = [(abs(d[i, j]), i, j)
                       for i in range(t, rows) for j in range(t, cols) if d[i, j] != 0]
            if not entries:
                return d, u, v
            _, i, j = min(entries)
            _swap_rows(d, t, i)
            _swap_rows(u, t, i)
            _swap_cols(d, t, j)
            _swap_cols(v, t, j)
            p = d[t, t]
            clean = True
            for r in range(t + 1, rows):
                q = d[r, t] // p
                if q:
                    d[r] -= q * d[t]
                    u[r] -= q * u[t]
                if d[r, t] != 0:
                    clean = False
            for c in range(t + 1, cols):
                q = d[t, c] // p
                if q:
                    d[:, c] -= q * d[:, t]
                    v[:, c] -= q * v[:, t]
                if d[t, c] != 0:
                    clean = False
            if not clean:
                continue
            # divisibility chain: fold an offending row into the pivot row
            offender = next((r for r in range(t + 1, rows)
                             for c in range(t + 1, cols) if d[r, c] % p != 0), None)
            if offender is None:
                break
            d[t] += d[offender]
            u[t] += u[offender]
        if d[t, t] < 0:
            d[t] = -d[t]
            u[t] = -u[t]
    return d, u, v


def matrix_rank(m):
    h, _ = hermite_normal_form(m)
    return sum(1 for row in h if any(x != 0 for x in row))


def integer_kernel(m):
    """
    Saturated integer kernel {x : m @ x = 0}.

    Returns:
        an integer matrix whose rows form a basis of the kernel, in Hermite
        normal form, or None when the kernel is trivial
    """
    mat = as_int_matrix(m)
    d, _, v = smith_normal_form(mat)
    rank = sum(1 for i in range(min(d.shape)) if d[i, i] != 0)
    if rank == mat.shape[1]:
        return None
    basis = v[:, rank:].T.copy()
    h, _ = hermite_normal_form(basis)
    return h


def kernel_basis(w):
    """
    Integer kernel of a full-rank weight matrix.

    Args:
        w: r x N integer matrix of rank r with N > r

    Returns:
        (N-r) x N matrix whose rows span the saturated kernel
    """
    mat = as_int_matrix(w)
    rows, cols = mat.shape
    if cols <= rows or matrix_rank(mat) != rows:
        raise ValueError('degenerate weight matrix: shape {}x{}'.format(rows, cols))
    return integer_kernel(mat)


def simplex_lattice_points(rays):
    """
    Lattice points of the simplex conv(0, v_1, ..., v_n) via box elements.

    The ray matrix M has Smith form D = U M V, so every coset of Z^n / M Z^n
    has a representative M V diag(y_i / d_i) with 0 <= y_i < d_i. Reducing the
    coefficients mod 1 gives the box element; it lies in the simplex when the
    reduced coefficients sum to at most 1.

    Args:
        rays: n integer vectors in Z^n

    Returns:
        LatticePointSet with the origin, the rays and every box element
        inside the simplex
    """
    vectors = [tuple(int(x) for x in r) for r in rays]
    n = len(vectors)
    if n == 0 or any(len(r) != n for r in vectors):
        raise ValueError('simplex needs n rays in dimension n')
    mat = as_int_matrix(vectors).T
    d, _, v = smith_normal_form(mat)
    diag = [d[i, i] for i in range(n)]
    if any(x == 0 for x in diag):
        raise ValueError('non-simplicial cone: rays are linearly dependent')

    points = {tuple([0] * n)}
    points.update(vectors)
    for y in itertools.product(*(range(x) for x in diag)):
        coeffs = []
        for row in range(n):
            lam = sum((Fraction(v[row, i] * y[i], diag[i]) for i in range(n)), Fraction(0))
            coeffs.append(lam - math.floor(lam))
        if sum(coeffs) > 1:
            continue
        point = []
        for row in range(n):
            coord = sum((mat[row, i] * coeffs[i] for i in range(n)), Fraction(0))
            point.append(int(coord))
        points.add(tuple(point))
    return LatticePointSet.from_points(n, points)


def _hyperplane_normal(points):
    """Normal of the affine hull of dim points in Z^dim by cofactor expansion."""
    base = points[0]
    diffs = [[p[j] - base[j] for j in range(len(base))] for p in points[1:]]
    dim = len(base)
    normal = []
    for j in range(dim):
        minor = [[row[c] for c in range(dim) if c != j] for row in diffs]
        normal.append((-1) ** j * integer_determinant(minor))
    return normal


def hull_facets(vertices):
    """
    Facets of conv(vertices) by brute force over dim-sized vertex subsets.

    Every normal points outward, so the hull is {x : normal . x <= offset}.

    Raises:
        ValueError: 'fan not complete' when the origin is not interior
    """
    pts = [tuple(int(x) for x in v) for v in vertices]
    if not pts:
        raise ValueError('fan not complete: no vertices')
    dim = len(pts[0])
    base = pts[0]
    if matrix_rank([[p[j] - base[j] for j in range(dim)] for p in pts]) != dim:
        raise ValueError('fan not complete: vertices do not span Z^{}'.format(dim))

    facets = {}
    for subset in itertools.combinations(pts, dim):
        normal = _hyperplane_normal(subset)
        if not any(normal):
            continue
        normal = make_primitive(normal)
        offset = sum(a * b for a, b in zip(normal, subset[0]))
        values = [sum(a * b for a, b in zip(normal, p)) for p in pts]
        if all(x <= offset for x in values):
            pass
        elif all(x >= offset for x in values):
            normal = tuple(-a for a in normal)
            offset = -offset
        else:
            continue
        key = (normal, offset)
        if key in facets:
            continue
        members = tuple(sorted({p for p in pts
                                if sum(a * b for a, b in zip(normal, p)) == offset}))
        facets[key] = Facet(normal=normal, offset=offset, members=members)

    if not facets or any(f.offset <= 0 for f in facets.values()):
        raise ValueError('fan not complete: origin is not interior to the hull')
    return sorted(facets.values(), key=lambda f: (f.normal, f.offset))


def hull_lattice_points(vertices):
    """
    All lattice points of conv(vertices).

    The hull is split into pyramids over its facets with apex at the origin;
    each facet is fanned out from its lexicographically smallest vertex and
    every resulting simplex is enumerated with simplex_lattice_points.
    """
    facets = hull_facets(vertices)
    dim = len(facets[0].normal)
    points = set()
    for facet in facets:
        apex, others = facet.members[0], facet.members[1:]
        for subset in itertools.combinations(others, dim - 1):
            rays = [apex, *subset]
            if integer_determinant(rays) == 0:
                continue
            points.update(simplex_lattice_points(rays).points)
    logger.debug('hull_lattice_points: %d facets, %d points', len(facets), len(points))
    return LatticePointSet.from_points(dim, points)
