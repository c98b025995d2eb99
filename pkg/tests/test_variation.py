import numpy as np
import pytest

from mengerflow.energy import energy_mp, report
from mengerflow.knot import FourierKnot, build_grid, scale
from mengerflow.variation import delta_ep, delta_length, delta_mp

from helpers import (
    circle_knot,
    figure_eight_knot,
    grid_pair,
    perturb,
    random_direction,
    trefoil_knot,
)

TWO_PI = 2 * np.pi


def test_delta_length_radial_growth():
    c = circle_knot()
    g = build_grid(c, 32)
    # Phi = gamma: d/dt L((1+t) gamma) = L(gamma) = 2 pi
    assert delta_length(g, g) == pytest.approx(TWO_PI, rel=1e-12)


def test_delta_length_translation_and_linearity():
    k = trefoil_knot()
    g = build_grid(k, 32)
    # constant translation has Phi' = 0; the zero knot is the nearest stand-in
    zero = FourierKnot(np.zeros((1, 3)), np.zeros((1, 3)))
    gz = build_grid(zero, 32, check_regular=False)
    assert delta_length(g, gz) == 0.0
    phi = random_direction(5, seed=1)
    gp = build_grid(phi, 32, check_regular=False)
    r = 3.7
    gp_scaled = build_grid(scale(phi, r), 32, check_regular=False)
    assert delta_length(g, gp_scaled) == pytest.approx(r * delta_length(g, gp), rel=1e-13)


def test_delta_mp_zero_direction():
    g = build_grid(trefoil_knot(), 24)
    zero = FourierKnot(np.zeros((1, 3)), np.zeros((1, 3)))
    gz = build_grid(zero, 24, check_regular=False)
    assert delta_mp(g, gz, 3.5) == 0.0


def test_delta_mp_circle_stationary_for_p3():
    g = build_grid(circle_knot(), 64)
    mp = energy_mp(g, 3)
    phi = random_direction(6, seed=2)
    gp = build_grid(phi, 64, check_regular=False)
    assert abs(delta_mp(g, gp, 3)) <= 1e-8 * mp


@pytest.mark.parametrize("p", [2.0, 3.0, 3.5, 4.0, 50.0])
def test_delta_mp_finite_differences(p):
    knot = trefoil_knot()
    m = 32
    gg = build_grid(knot, m)
    phi = random_direction(5, seed=3)
    gp = build_grid(phi, m, check_regular=False)
    analytic = delta_mp(gg, gp, p)
    tau = 1e-5
    fd = (energy_mp(build_grid(perturb(knot, phi, tau), m), p)
          - energy_mp(build_grid(perturb(knot, phi, -tau), m), p)) / (2 * tau)
    assert analytic == pytest.approx(fd, rel=1e-6)


def test_delta_mp_linearity():
    gg = build_grid(figure_eight_knot(), 24)
    p1 = random_direction(5, seed=4)
    p2 = random_direction(5, seed=5)
    combo = FourierKnot(2.0 * p1.cos_coeffs - 0.5 * p2.cos_coeffs,
                        2.0 * p1.sin_coeffs - 0.5 * p2.sin_coeffs)
    lhs = delta_mp(gg, build_grid(combo, 24, check_regular=False), 3.5)
    rhs = (2.0 * delta_mp(gg, build_grid(p1, 24, check_regular=False), 3.5)
           - 0.5 * delta_mp(gg, build_grid(p2, 24, check_regular=False), 3.5))
    assert lhs == pytest.approx(rhs, rel=1e-10)


@pytest.mark.parametrize("p", [2.0, 3.5, 4.0])
def test_delta_mp_homogeneity(p):
    knot = trefoil_knot()
    phi = random_direction(5, seed=6)
    r = 2.0
    d1 = delta_mp(*grid_pair(knot, phi, 24), p)
    d2 = delta_mp(*grid_pair(scale(knot, r), phi, 24), p)
    assert d2 == pytest.approx(r ** (2.0 - p) * d1, rel=1e-10)


@pytest.mark.parametrize("p", [2.0, 3.0, 3.5, 4.0, 50.0])
def test_delta_mp_radial_identity(p):
    # delta M_p(g, g) = (3 - p) M_p(g): the no-stationary-points identity
    g = build_grid(trefoil_knot(), 24)
    lhs = delta_mp(g, g, p)
    rhs = (3.0 - p) * energy_mp(g, p)
    if p == 3.0:
        assert abs(lhs) <= 1e-10 * energy_mp(g, 3.0)
    else:
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_delta_ep_circle_stationary():
    g = build_grid(circle_knot(), 64)
    rep = report(g, 4)
    for seed in range(3):
        phi = random_direction(8, seed=seed)
        gp = build_grid(phi, 64, check_regular=False)
        for p in (2.0, 3.0, 4.0):
            assert abs(delta_ep(g, gp, p)) <= 1e-8


def test_delta_ep_p3_reduction():
    gg = build_grid(trefoil_knot(), 24)
    phi = random_direction(5, seed=9)
    gp = build_grid(phi, 24, check_regular=False)
    rep = report(gg, 3)
    expected = (rep.mp / rep.length**3) ** (1 / 3.0) * rep.length / (3 * rep.mp) \
        * delta_mp(gg, gp, 3)
    assert delta_ep(gg, gp, 3) == pytest.approx(expected, rel=1e-12)


def test_delta_ep_scaling():
    knot = trefoil_knot()
    phi = random_direction(5, seed=10)
    r = 2.0
    d1 = delta_ep(*grid_pair(knot, phi, 24), 3.5)
    d2 = delta_ep(*grid_pair(scale(knot, r), phi, 24), 3.5)
    assert d2 == pytest.approx(d1 / r, rel=1e-10)


def _long_form_delta(grid_g, grid_p, p):
    """Unsimplified first-variation quadrature (tiny grids only).

    Off-diagonal integrand with all three tangential slots, all three pair
    terms, and the wedge-product derivative left as a wedge.
    """
    m = grid_g.m_samples
    pts, d1 = grid_g.points, grid_g.d1
    phi, dphi = grid_p.points, grid_p.d1
    w = grid_g.speed
    total = 0.0
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if i == j or j == k or i == k:
                    continue
                vij = pts[j] - pts[i]
                vik = pts[k] - pts[i]
                vjk = pts[k] - pts[j]
                dij = np.linalg.norm(vij)
                dik = np.linalg.norm(vik)
                djk = np.linalg.norm(vjk)
                wvec = np.cross(vij, vik)
                wn = np.linalg.norm(wvec)
                pref = 2.0**p * w[i] * w[j] * w[k] / (dij * djk * dik) ** p
                tang = (d1[i] @ dphi[i] / w[i] ** 2
                        + d1[j] @ dphi[j] / w[j] ** 2
                        + d1[k] @ dphi[k] / w[k] ** 2)
                pair = ((vij @ (phi[j] - phi[i])) / dij**2
                        + (vjk @ (phi[k] - phi[j])) / djk**2
                        + (vik @ (phi[k] - phi[i])) / dik**2)
                dwedge = (np.cross(phi[j] - phi[i], vik)
                          + np.cross(vij, phi[k] - phi[i]))
                total += pref * (wn**p * (tang - p * pair)
                                 + p * wn ** (p - 2.0) * (wvec @ dwedge))
    # diagonal parts are shared with the production path; reuse via delta_mp
    from mengerflow.variation import _diag_part, _pair_part
    total += _pair_part(grid_g, grid_p, p) + _diag_part(grid_g, grid_p, p)
    return grid_g.h**3 * total


@pytest.mark.parametrize("m", [8, 12])
def test_delta_mp_against_long_form(m):
    knot = trefoil_knot()
    phi = random_direction(5, seed=12)
    gg, gp = grid_pair(knot, phi, m)
    for p in (2.0, 3.5):
        assert delta_mp(gg, gp, p) == pytest.approx(_long_form_delta(gg, gp, p), rel=1e-10)


def test_grids_must_share_m():
    gg = build_grid(trefoil_knot(), 16)
    gp = build_grid(random_direction(5, seed=13), 24, check_regular=False)
    with pytest.raises(ValueError):
        delta_mp(gg, gp, 3)
