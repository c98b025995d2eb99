import itertools

import numpy as np
import pytest

from mengerflow.geometry import dot, inv_circumradius, local_curvature, wedge

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def test_dot_basics():
    assert dot(E1, E2) == 0.0
    assert dot(np.array([1.0, 2, 3]), np.array([1.0, 2, 3])) == 14.0
    assert dot(np.array([1.0, 1, 0]), np.array([2.0, 0, 5])) == 2.0


def test_dot_bilinear_symmetric():
    rng = np.random.default_rng(0)
    a, b, c = rng.normal(size=(3, 3))
    assert dot(a, b) == pytest.approx(dot(b, a), rel=1e-15)
    assert dot(a + 2 * c, b) == pytest.approx(dot(a, b) + 2 * dot(c, b), rel=1e-12)
    assert dot(a, a) == pytest.approx(np.linalg.norm(a) ** 2, rel=1e-15)


def test_wedge_basics():
    assert np.allclose(wedge(E1, E2), E3)
    a = np.array([0.3, -1.2, 2.0])
    assert np.all(wedge(a, a) == 0.0)
    assert np.allclose(wedge(a, E2), -wedge(E2, a))


def test_wedge_norm_identity():
    a = np.array([1.0, 2.0, 0.0])
    b = np.array([0.0, 1.0, 1.0])
    lhs = dot(wedge(a, b), wedge(a, b))
    assert lhs == pytest.approx(6.0, rel=1e-14)
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.normal(size=(2, 3))
        rhs = dot(a, a) * dot(b, b) - dot(a, b) ** 2
        assert dot(wedge(a, b), wedge(a, b)) == pytest.approx(rhs, rel=1e-12)


def test_lagrange_identity():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b, c, d = rng.normal(size=(4, 3))
        lhs = dot(wedge(a, b), wedge(c, d))
        rhs = dot(a, c) * dot(b, d) - dot(a, d) * dot(b, c)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_inv_circumradius_unit_circle():
    ang = [0.3, 1.7, 4.1]
    pts = [np.array([np.cos(t), np.sin(t), 0.0]) for t in ang]
    assert inv_circumradius(*pts) == pytest.approx(1.0, rel=1e-13)


def test_inv_circumradius_collinear_is_zero():
    x = np.zeros(3)
    y = np.array([1.0, 0, 0])
    z = np.array([2.0, 0, 0])
    assert inv_circumradius(x, y, z) == 0.0


def test_inv_circumradius_right_triangle():
    x = np.zeros(3)
    y = np.array([1.0, 0, 0])
    z = np.array([0.0, 1, 0])
    # Thales: hypotenuse is a diameter, R = sqrt(2)/2
    assert inv_circumradius(x, y, z) == pytest.approx(np.sqrt(2.0), rel=1e-14)


def test_inv_circumradius_coincident_points_error():
    x = np.array([1.0, 2, 3])
    y = np.array([0.0, 0, 1])
    with pytest.raises(ValueError):
        inv_circumradius(x, x, y)


def test_inv_circumradius_permutation_symmetry():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(3, 3))
    vals = [inv_circumradius(*[pts[i] for i in perm])
            for perm in itertools.permutations(range(3))]
    assert max(vals) - min(vals) <= 1e-13 * max(vals)


@pytest.mark.parametrize("r", [0.5, 2.0, 10.0])
def test_inv_circumradius_homogeneity(r):
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(3, 3))
    ref = inv_circumradius(*pts)
    scaled = inv_circumradius(*(r * pts))
    assert scaled * r == pytest.approx(ref, rel=1e-12)


def _inv_r_distances(x, y, z):
    # all-distances (Heron-style) form; numerically worse, test oracle only
    dxy = np.linalg.norm(y - x)
    dxz = np.linalg.norm(z - x)
    dyz = np.linalg.norm(z - y)
    prod = ((dxy + dxz + dyz) * (dxy + dxz - dyz)
            * (dxy - dxz + dyz) * (-dxy + dxz + dyz))
    return np.sqrt(max(prod, 0.0)) / (dxy * dxz * dyz)


def test_inv_circumradius_matches_distance_form():
    rng = np.random.default_rng(5)
    for _ in range(100):
        pts = rng.normal(size=(3, 3))
        a = inv_circumradius(*pts)
        b = _inv_r_distances(*pts)
        assert a == pytest.approx(b, rel=1e-9)


def test_local_curvature_circle():
    assert local_curvature(np.array([0.0, 1, 0]), np.array([-1.0, 0, 0])) == pytest.approx(1.0)
    r = 3.7
    assert local_curvature(np.array([0.0, r, 0]), np.array([-r, 0, 0])) == pytest.approx(1 / r)


def test_local_curvature_straight_and_errors():
    d1 = np.array([2.0, 0, 0])
    assert local_curvature(d1, 3.0 * d1) == 0.0
    with pytest.raises(ValueError):
        local_curvature(np.zeros(3), d1)
