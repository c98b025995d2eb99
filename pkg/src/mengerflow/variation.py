"""First variation of the discrete energies for arbitrary test directions.

These quadrature evaluations are the exact gradients of the discrete
energies in :mod:`mengerflow.energy` (same grid, same diagonal
extensions), so central finite differences of the energy converge to them
at the usual O(tau^2) rate.  They also serve as the independent check for
the Galerkin matrices built by :mod:`mengerflow.assembly`.

Both the curve gamma and the direction Phi enter as sample grids over the
same M (build both with :func:`mengerflow.knot.build_grid`; Phi lives in
the same Fourier space as gamma).

The off-diagonal integrand is evaluated in the simplified form obtained
by collecting, for every unordered triple, the slot permutations of the
symmetric integrand; the two-point and three-point coincidence terms use
their continuous extensions, the former with the usual factor 3 for the
three positions of the doubled argument.
"""

from __future__ import annotations

import numpy as np

from ._triples import chunk_slices, map_chunks, powp, strict_triples
from .knot import DegenerateKnotError, SampleGrid
from .energy import report as energy_report

__all__ = ["delta_length", "delta_mp", "delta_ep", "delta_ep_lambda"]


def _check_pair(grid_gamma: SampleGrid, grid_phi: SampleGrid) -> None:
    if grid_gamma.m_samples != grid_phi.m_samples:
        raise ValueError(
            f"gamma and Phi grids must share M, got {grid_gamma.m_samples} != {grid_phi.m_samples}"
        )


def delta_length(grid_gamma: SampleGrid, grid_phi: SampleGrid) -> float:
    """delta L(gamma, Phi) = h * sum gamma'(x_i) . Phi'(x_i) / |gamma'(x_i)|."""
    _check_pair(grid_gamma, grid_phi)
    num = np.sum(grid_gamma.d1 * grid_phi.d1, axis=1)
    return float(grid_gamma.h * np.sum(num / grid_gamma.speed))


def _triple_part(grid_g: SampleGrid, grid_p: SampleGrid, p: float) -> float:
    """Sum of the off-diagonal integrand over all ordered distinct triples.

    For one unordered triple {a, b, c} the six slot permutations collapse
    (exactly, by relabelling) to

        base^p * w3 * [ 6 sum_u g'_u.F'_u/|g'_u|^2
                        - 6p sum_{uv} (d_uv . dF_uv)/|d_uv|^2 ]
        + 8p * base^(p-2) * w3 / (d_ab d_ac d_bc)^2 * sum_u G(u)

    with G(u) the two-distances wedge-residual group centred at u.
    """
    pts, d1, speed = grid_g.points, grid_g.d1, grid_g.speed
    phi, dphi = grid_p.points, grid_p.d1
    i_t, j_t, k_t = strict_triples(grid_g.m_samples)
    if i_t.size == 0:
        return 0.0

    def work(sl):
        ia, ib, ic = i_t[sl], j_t[sl], k_t[sl]
        pa, pb, pc = pts[ia], pts[ib], pts[ic]
        u = pb - pa
        v = pc - pa
        w = pc - pb
        du2 = np.sum(u * u, axis=1)
        dv2 = np.sum(v * v, axis=1)
        dw2 = np.sum(w * w, axis=1)
        cr = np.cross(u, v)
        x0n = np.sqrt(np.sum(cr * cr, axis=1))
        prod2 = du2 * dv2 * dw2
        base = 2.0 * x0n / np.sqrt(prod2)
        w3 = speed[ia] * speed[ib] * speed[ic]

        fa, fb, fc = phi[ia], phi[ib], phi[ic]
        eu = fb - fa
        ev = fc - fa
        ew = fc - fb

        tangential = (
            np.sum(d1[ia] * dphi[ia], axis=1) / speed[ia] ** 2
            + np.sum(d1[ib] * dphi[ib], axis=1) / speed[ib] ** 2
            + np.sum(d1[ic] * dphi[ic], axis=1) / speed[ic] ** 2
        )
        pairs = (
            np.sum(u * eu, axis=1) / du2
            + np.sum(v * ev, axis=1) / dv2
            + np.sum(w * ew, axis=1) / dw2
        )

        def wedge_group(d1v, d2v, e1v, e2v, d1n2, d2n2):
            return (
                d2n2 * np.sum(d1v * e1v, axis=1)
                + d1n2 * np.sum(d2v * e2v, axis=1)
                - np.sum(d1v * d2v, axis=1)
                * (np.sum(d2v * e1v, axis=1) + np.sum(d1v * e2v, axis=1))
            )

        g_sum = (
            wedge_group(u, v, eu, ev, du2, dv2)          # centre a
            + wedge_group(-u, w, -eu, ew, du2, dw2)      # centre b
            + wedge_group(-v, -w, -ev, -ew, dv2, dw2)    # centre c
        )
        term = powp(base, p) * w3 * (6.0 * tangential - 6.0 * p * pairs)
        term += 8.0 * p * powp(base, p - 2.0) * w3 / prod2 * g_sum
        return float(np.sum(term))

    return float(sum(map_chunks(work, chunk_slices(i_t.size))))


def _pair_part(grid_g: SampleGrid, grid_p: SampleGrid, p: float) -> float:
    """3 * sum over ordered pairs (i, j), i != j of the two-point extension.

    The integrand is the tau-derivative of c(x_i, x_j, x_j)^p
    |g'_i| |g'_j|^2, written with base-first powers
    b_ij = 2 |(p_j - p_i) ^ p'_j| / (|d_ij|^2 |p'_j|).
    """
    pts, d1, speed = grid_g.points, grid_g.d1, grid_g.speed
    phi, dphi = grid_p.points, grid_p.d1
    m = grid_g.m_samples
    off = ~np.eye(m, dtype=bool)

    g = pts[None, :, :] - pts[:, None, :]          # g[i, j] = p_j - p_i
    dn2 = np.sum(g * g, axis=2)
    if np.any(dn2[off] == 0.0):
        raise DegenerateKnotError("coincident samples: the curve self-intersects at grid resolution")
    cr = np.cross(g, d1[None, :, :])
    x1n = np.sqrt(np.sum(cr * cr, axis=2))
    np.fill_diagonal(dn2, 1.0)                     # diagonal masked below

    b = 2.0 * x1n / (dn2 * speed[None, :])

    dphi_pair = phi[None, :, :] - phi[:, None, :]  # Phi_j - Phi_i
    t_i = np.sum(d1 * dphi, axis=1) / speed**2
    t_j = t_i[None, :]
    g_dphi = np.sum(g * dphi_pair, axis=2)
    g_p1j = np.sum(g * d1[None, :, :], axis=2)
    p1j_dphi = np.sum(d1[None, :, :] * dphi_pair, axis=2)
    g_dphi1j = np.sum(g * dphi[None, :, :], axis=2)
    p1j_phi1j = np.sum(d1 * dphi, axis=1)[None, :]

    group1 = t_i[:, None] + (2.0 - p) * t_j - 2.0 * p * g_dphi / dn2
    group2 = (
        speed[None, :] ** 2 * g_dphi
        + dn2 * p1j_phi1j
        - g_p1j * (p1j_dphi + g_dphi1j)
    )
    term = speed[:, None] * (
        powp(b, p) * speed[None, :] ** 2 * group1
        + 4.0 * p * powp(b, p - 2.0) / dn2**2 * group2
    )
    return 3.0 * float(np.sum(term[off]))


def _diag_part(grid_g: SampleGrid, grid_p: SampleGrid, p: float) -> float:
    """Sum of the three-point coincidence integrand over the samples."""
    d1, d2, speed = grid_g.d1, grid_g.d2, grid_g.speed
    dphi1, dphi2 = grid_p.d1, grid_p.d2
    x2 = np.cross(d1, d2)
    kappa = np.sqrt(np.sum(x2 * x2, axis=1)) / speed**3
    t1 = np.sum(d1 * dphi1, axis=1)
    inner = (
        speed**2 * np.sum(d2 * dphi2, axis=1)
        + np.sum(d2 * d2, axis=1) * t1
        - np.sum(d1 * d2, axis=1) * (np.sum(d1 * dphi2, axis=1) + np.sum(d2 * dphi1, axis=1))
    )
    term = (3.0 - 3.0 * p) * powp(kappa, p) * speed * t1
    term += p * powp(kappa, p - 2.0) / speed**3 * inner
    return float(np.sum(term))


def delta_mp(grid_gamma: SampleGrid, grid_phi: SampleGrid, p: float) -> float:
    """First variation of the discrete M_p at gamma in direction Phi.

    Exact gradient of :func:`mengerflow.energy.energy_mp` on the same
    grid; linear in Phi and homogeneous of degree 2-p in gamma.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    _check_pair(grid_gamma, grid_phi)
    h3 = grid_gamma.h**3
    return h3 * (
        _triple_part(grid_gamma, grid_phi, p)
        + _pair_part(grid_gamma, grid_phi, p)
        + _diag_part(grid_gamma, grid_phi, p)
    )


def delta_ep(grid_gamma: SampleGrid, grid_phi: SampleGrid, p: float, rep=None) -> float:
    """First variation of the scale-invariant energy E_p.

    delta E_p = (M_p/L^3)^(1/p) * ( L/(p M_p) delta M_p + (p-3)/p delta L ).
    ``rep`` may pass the precomputed energy report of gamma.
    """
    if rep is None:
        rep = energy_report(grid_gamma, p)
    c_mp, c_len = ep_weights(rep)
    return c_mp * delta_mp(grid_gamma, grid_phi, p) + c_len * delta_length(grid_gamma, grid_phi)


def delta_ep_lambda(grid_gamma: SampleGrid, grid_phi: SampleGrid, p: float, lam: float,
                    rep=None) -> float:
    """First variation of the length-penalized energy E_p^lambda."""
    if rep is None:
        rep = energy_report(grid_gamma, p)
    c_mp = ep_lambda_weight(rep)
    return c_mp * delta_mp(grid_gamma, grid_phi, p) + lam * delta_length(grid_gamma, grid_phi)


def ep_weights(rep) -> tuple[float, float]:
    """(coefficient of delta M_p, coefficient of delta L) for E_p.

    Assembled from log(M_p) so the weights stay finite for large p.
    """
    p = rep.p
    log_l = np.log(rep.length)
    pref = (rep.log_mp - 3.0 * log_l) / p
    c_mp = float(np.exp(pref + log_l - np.log(p) - rep.log_mp))
    c_len = float(np.exp(pref)) * (p - 3.0) / p
    return c_mp, c_len


def ep_lambda_weight(rep) -> float:
    """Coefficient of delta M_p for E_p^lambda: (1/p) M_p^((1-p)/p)."""
    p = rep.p
    return float(np.exp(rep.log_mp * (1.0 - p) / p - np.log(p)))
