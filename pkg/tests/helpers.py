"""Shared fixture curves and small oracles for the test suite."""

import numpy as np

from mengerflow.knot import FourierKnot, SampleGrid, build_grid, fit_fourier

TWO_PI = 2.0 * np.pi


def circle_knot(radius=1.0, n_modes=1):
    """Circle stored exactly in mode 1, padded with zero modes if asked."""
    a = np.zeros((n_modes, 3))
    b = np.zeros((n_modes, 3))
    a[0, 0] = radius
    b[0, 1] = radius
    return FourierKnot(a, b)


def trefoil_knot():
    """Torus-knot trefoil (2 + cos 3t) e_r(2t) + sin(3t) e_z, exact in 5 modes."""
    a = np.zeros((5, 3))
    b = np.zeros((5, 3))
    a[0, 0] = 0.5
    b[0, 1] = -0.5
    a[1, 0] = 2.0
    b[1, 1] = 2.0
    b[2, 2] = 1.0
    a[4, 0] = 0.5
    b[4, 1] = 0.5
    return FourierKnot(a, b)


def figure_eight_knot():
    """Figure-eight (2 + cos 2t) e_r(3t) + sin(4t) e_z, exact in 5 modes."""
    a = np.zeros((5, 3))
    b = np.zeros((5, 3))
    a[0, 0] = 0.5
    b[0, 1] = 0.5
    a[2, 0] = 2.0
    b[2, 1] = 2.0
    b[3, 2] = 1.0
    a[4, 0] = 0.5
    b[4, 1] = 0.5
    return FourierKnot(a, b)


def stadium_points(m_fit=256):
    """Exact stadium (semicircle caps r=1/2, straights length 1), arclength sampled."""
    per = np.pi + 2.0
    s = np.arange(m_fit) / m_fit * per
    pts = np.zeros((m_fit, 3))
    for i, si in enumerate(s):
        if si < 1.0:
            pts[i, 0] = si - 0.5
            pts[i, 1] = -0.5
        elif si < 1.0 + np.pi / 2:
            ang = 2.0 * (si - 1.0) - np.pi / 2
            pts[i, 0] = 0.5 + 0.5 * np.cos(ang)
            pts[i, 1] = 0.5 * np.sin(ang)
        elif si < 2.0 + np.pi / 2:
            pts[i, 0] = 0.5 - (si - 1.0 - np.pi / 2)
            pts[i, 1] = 0.5
        else:
            ang = np.pi / 2 + 2.0 * (si - 2.0 - np.pi / 2)
            pts[i, 0] = -0.5 + 0.5 * np.cos(ang)
            pts[i, 1] = 0.5 * np.sin(ang)
    return pts


def stadium_knot(n_modes=20):
    return fit_fourier(stadium_points(), n_modes)


def random_direction(n_modes, seed, decay=2.0):
    """Random test direction with decaying mode amplitudes."""
    rng = np.random.default_rng(seed)
    damp = 1.0 / (1.0 + np.arange(n_modes))[:, None] ** decay
    return FourierKnot(rng.normal(size=(n_modes, 3)) * damp,
                       rng.normal(size=(n_modes, 3)) * damp)


def random_regular_knot(n_modes, seed):
    """Mode-1 circle plus a small random perturbation; regular by construction."""
    rng = np.random.default_rng(seed)
    a = np.zeros((n_modes, 3))
    b = np.zeros((n_modes, 3))
    a[0, 0] = 1.0
    b[0, 1] = 1.0
    damp = 0.2 / (1.0 + np.arange(n_modes))[:, None] ** 2
    a += rng.normal(size=(n_modes, 3)) * damp
    b += rng.normal(size=(n_modes, 3)) * damp
    return FourierKnot(a, b)


def perturb(knot, direction, tau):
    return FourierKnot(knot.cos_coeffs + tau * direction.cos_coeffs,
                       knot.sin_coeffs + tau * direction.sin_coeffs)


def coeff_matrix(knot):
    """Coefficient rows per component, columns interleaved cos/sin per mode."""
    c = np.empty((3, 2 * knot.n_modes))
    c[:, 0::2] = knot.cos_coeffs.T
    c[:, 1::2] = knot.sin_coeffs.T
    return c


def square_polygon_grid(m):
    """Square polygon (side 2) sampled at m points, corners included.

    The parametrization has constant speed 8/(2*pi); corner samples carry
    the outgoing edge direction.  Second derivatives are zero.
    """
    if m % 4 != 0:
        raise ValueError("need m divisible by 4 so corners are samples")
    quarter = m // 4
    corners = np.array([[1, -1, 0], [1, 1, 0], [-1, 1, 0], [-1, -1, 0]], dtype=float)
    dirs = np.array([[0, 1, 0], [-1, 0, 0], [0, -1, 0], [1, 0, 0]], dtype=float)
    speed = 8.0 / TWO_PI
    pts = np.empty((m, 3))
    d1 = np.empty((m, 3))
    for i in range(m):
        edge, pos = divmod(i, quarter)
        frac = pos / quarter
        pts[i] = corners[edge] + 2.0 * frac * dirs[edge]
        d1[i] = dirs[edge] * speed
    return SampleGrid(m, TWO_PI / m, pts, d1, np.zeros((m, 3)), None, None, None, speed)


def square_vertices(n_per_edge=16):
    """Closed square polygon vertex list (no repeated endpoint)."""
    corners = np.array([[1, -1, 0], [1, 1, 0], [-1, 1, 0], [-1, -1, 0]], dtype=float)
    dirs = np.array([[0, 1, 0], [-1, 0, 0], [0, -1, 0], [1, 0, 0]], dtype=float)
    rows = []
    for edge in range(4):
        for k in range(n_per_edge):
            rows.append(corners[edge] + 2.0 * (k / n_per_edge) * dirs[edge])
    return np.asarray(rows)


def grid_pair(gamma, phi, m):
    """Grids of a curve and a (possibly irregular) direction over the same M."""
    return build_grid(gamma, m), build_grid(phi, m, check_regular=False)
