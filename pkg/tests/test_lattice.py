import itertools

import numpy as np
import pytest

from lib.lattice import (
    LatticePointSet, as_int_matrix, extended_gcd, hermite_normal_form, hull_facets,
    hull_lattice_points, integer_determinant, integer_kernel, kernel_basis, make_primitive,
    simplex_lattice_points, smith_normal_form,
)


def to_lists(m):
    return [[int(x) for x in row] for row in m]


def test_extended_gcd():
    for a, b in [(12, 18), (-4, 6), (7, 0), (0, -5), (35, 64)]:
        g, x, y = extended_gcd(a, b)
        assert g >= 0
        assert a * x + b * y == g
        assert g == np.gcd(a, b)


def test_make_primitive():
    assert make_primitive([4, -6, 2]) == (2, -3, 1)
    with pytest.raises(ValueError, match='zero vector'):
        make_primitive([0, 0])


def test_as_int_matrix_rejects_fractions():
    with pytest.raises(ValueError, match='non-integer'):
        as_int_matrix([[1, 2.5]])
    assert to_lists(as_int_matrix([[1.0, 2]])) == [[1, 2]]


def test_integer_determinant():
    assert integer_determinant([[2, 1], [1, 3]]) == 5
    assert integer_determinant([[0, 1], [1, 0]]) == -1
    assert integer_determinant([[1, 2], [2, 4]]) == 0
    assert integer_determinant(np.zeros((0, 0), dtype=object)) == 1
    m = [[3, 1, 4], [1, 5, 9], [2, 6, 5]]
    assert integer_determinant(m) == round(np.linalg.det(np.array(m, dtype=float)))


def test_hermite_normal_form_small():
    h, u = hermite_normal_form([[2, 4], [1, 3]])
    assert to_lists(h) == [[1, 1], [0, 2]]
    assert to_lists(u.dot(as_int_matrix([[2, 4], [1, 3]]))) == to_lists(h)
    assert abs(integer_determinant(u)) == 1


def test_hermite_normal_form_random():
    rng = np.random.default_rng(7)
    for _ in range(25):
        m = rng.integers(-6, 7, size=(3, 5)).tolist()
        h, u = hermite_normal_form(m)
        assert to_lists(u.dot(as_int_matrix(m))) == to_lists(h)
        assert abs(integer_determinant(u)) == 1
        last = -1
        for row in to_lists(h):
            if not any(row):
                continue
            lead = next(j for j, x in enumerate(row) if x)
            assert lead > last
            assert row[lead] > 0
            last = lead


def test_smith_normal_form_examples():
    d, _, _ = smith_normal_form([[2, 0], [0, 3]])
    assert to_lists(d) == [[1, 0], [0, 6]]
    d, _, _ = smith_normal_form([[1, 0], [1, 2]])
    assert to_lists(d) == [[1, 0], [0, 2]]


def test_smith_normal_form_random():
    rng = np.random.default_rng(3)
    for _ in range(25):
        m = rng.integers(-5, 6, size=(3, 4)).tolist()
        d, u, v = smith_normal_form(m)
        assert to_lists(u.dot(as_int_matrix(m)).dot(v)) == to_lists(d)
        assert abs(integer_determinant(u)) == 1
        assert abs(integer_determinant(v)) == 1
        diag = [int(d[i, i]) for i in range(3)]
        assert all(x >= 0 for x in diag)
        for i in range(2):
            if diag[i + 1]:
                assert diag[i] != 0 and diag[i + 1] % diag[i] == 0
        off = [int(d[i, j]) for i in range(3) for j in range(4) if i != j]
        assert not any(off)


def test_kernel_basis_of_weight_matrix():
    k = kernel_basis([[1, 1, 0, 0], [0, 0, 1, 1]])
    assert k.shape == (2, 4)
    w = as_int_matrix([[1, 1, 0, 0], [0, 0, 1, 1]])
    assert not any(int(x) for x in w.dot(k.T).flatten())


def test_kernel_basis_is_saturated():
    # kernel of (2, 4) is spanned by (-2, 1), not (-4, 2)
    k = integer_kernel([[2, 4]])
    assert k.shape == (1, 2)
    assert abs(int(k[0, 0])) == 2 and abs(int(k[0, 1])) == 1


def test_kernel_basis_degenerate():
    with pytest.raises(ValueError, match='degenerate weight matrix'):
        kernel_basis([[1, 2], [2, 4]] + [[0, 0]])
    with pytest.raises(ValueError, match='degenerate weight matrix'):
        kernel_basis([[1, 1, 1], [2, 2, 2]])


def test_integer_kernel_trivial():
    assert integer_kernel([[1, 0], [0, 1]]) is None


def test_simplex_lattice_points_examples():
    pts = simplex_lattice_points([(1, 0), (1, 2)])
    assert set(pts.points) == {(0, 0), (1, 0), (1, 2), (1, 1)}
    pts = simplex_lattice_points([(1, 0), (0, 1)])
    assert len(pts) == 3


def test_simplex_lattice_points_dependent_rays():
    with pytest.raises(ValueError, match='non-simplicial'):
        simplex_lattice_points([(1, 2), (2, 4)])


def brute_force_simplex(rays):
    mat = np.array(rays, dtype=float).T
    lo = np.minimum(0, mat.min(axis=1)).astype(int)
    hi = np.maximum(0, mat.max(axis=1)).astype(int)
    found = set()
    for point in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        lam = np.linalg.solve(mat, np.array(point, dtype=float))
        if np.all(lam >= -1e-9) and lam.sum() <= 1 + 1e-9:
            found.add(point)
    return found


def test_simplex_lattice_points_against_brute_force():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 20:
        rays = [tuple(int(x) for x in r) for r in rng.integers(-4, 5, size=(3, 3))]
        if integer_determinant(rays) == 0:
            continue
        assert set(simplex_lattice_points(rays).points) == brute_force_simplex(rays)
        checked += 1


def test_hull_facets_of_square():
    facets = hull_facets([(1, 0), (0, 1), (-1, 0), (0, -1)])
    assert len(facets) == 4
    assert all(f.offset == 1 for f in facets)
    assert {f.normal for f in facets} == {(1, 1), (1, -1), (-1, 1), (-1, -1)}


def test_hull_facets_origin_outside():
    with pytest.raises(ValueError, match='fan not complete'):
        hull_facets([(1, 0), (0, 1), (1, 1)])
    with pytest.raises(ValueError, match='fan not complete'):
        hull_facets([(1, 0), (2, 0), (-1, 0)])


def test_hull_lattice_points_triangle():
    pts = hull_lattice_points([(1, 0), (0, 1), (-2, -1)])
    assert set(pts.points) == {(0, 0), (1, 0), (0, 1), (-2, -1), (-1, 0)}


def test_hull_lattice_points_octahedron():
    vertices = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    pts = hull_lattice_points(vertices)
    assert len(pts) == 7
    assert (0, 0, 0) in pts


def test_lattice_point_set_checks_length():
    with pytest.raises(ValueError, match='length'):
        LatticePointSet.from_points(2, [(1, 2, 3)])
