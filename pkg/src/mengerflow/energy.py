"""Discrete curve energies over a sample grid.

The triple integral behind the Menger-type energy is discretized by the
periodic trapezoidal rule in all three variables, which turns it into a
plain sum over index triples.  The full M^3 sum splits into

    6 * (strict triples i < j < k)
  + 3 * (ordered pairs i != j with the two-point diagonal integrand)
  +     (per-sample diagonal, the classic curvature)

where the diagonal entries use the continuous extension of the integrand
(Fourier knots are C-infinity, so the extension always exists).

Each triple contributes ``base**p`` with

    base = 2 |(p_j - p_i) ^ (p_k - p_i)| / (|d_ij| |d_jk| |d_ik|),

the inverse circumradius of the sample triple.  Powers are taken of the
assembled base first, and the accumulation is rescaled by the largest
base so that intermediate sums cannot overflow even for very large p;
the scale-invariant energies are assembled from log(M_p) for the same
reason.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._triples import chunk_slices, map_chunks, powp, strict_triples, wedge_norms
from .knot import DegenerateKnotError, SampleGrid

TWO_PI = 2.0 * np.pi

__all__ = [
    "EnergyReport",
    "length",
    "diagonal_c",
    "energy_mp",
    "energy_ep",
    "energy_ep_lambda",
    "thickness",
    "lambda_for_target_radius",
    "radius_for_lambda",
    "report",
]


@dataclass(frozen=True)
class EnergyReport:
    """Length, energies and thickness of one sampled curve.

    ``log_mp`` carries log(M_p) so the scale-invariant combinations stay
    finite even when M_p itself overflows for large p.
    """

    length: float
    mp: float
    ep: float
    thickness: float
    p: float
    ep_lambda: float | None = None
    lam: float | None = None
    log_mp: float = float("-inf")


def length(grid: SampleGrid) -> float:
    """Trapezoidal curve length h * sum |gamma'(x_i)|."""
    return float(grid.h * np.sum(grid.speed))


def _pair_tables(grid: SampleGrid):
    """Pairwise differences/distances and the two-point diagonal bases.

    Returns (dvec, dn, c2) where ``dvec[i, j] = p_i - p_j``, ``dn`` the
    distance matrix and ``c2[i, j]`` the extended integrand value
    c(x_i, x_j, x_j) = 2 |(p_j - p_i) ^ p'_j| / (|d_ij|^2 |p'_j|); the
    diagonal of ``c2`` is unused and zero.
    """
    pts = grid.points
    dvec = pts[:, None, :] - pts[None, :, :]
    dn = np.sqrt(np.sum(dvec * dvec, axis=2))
    m = grid.m_samples
    off = ~np.eye(m, dtype=bool)
    if np.any(dn[off] == 0.0):
        raise DegenerateKnotError("coincident samples: the curve self-intersects at grid resolution")
    cross = np.cross(dvec, grid.d1[None, :, :])
    x1n = np.sqrt(np.sum(cross * cross, axis=2))
    c2 = np.zeros_like(dn)
    speed = grid.speed
    c2[off] = 2.0 * x1n[off] / (dn[off] ** 2 * speed[np.nonzero(off)[1]])
    return dvec, dn, c2


def _curvatures(grid: SampleGrid) -> np.ndarray:
    cross = np.cross(grid.d1, grid.d2)
    return np.sqrt(np.sum(cross * cross, axis=1)) / grid.speed**3


def _triple_bases(grid: SampleGrid):
    """Inverse circumradius and speed weight for every strict triple."""
    pts = grid.points
    i_t, j_t, k_t = strict_triples(grid.m_samples)
    base = np.empty(i_t.size)
    w3 = np.empty(i_t.size)
    speed = grid.speed

    def work(sl):
        pi, pj, pk = pts[i_t[sl]], pts[j_t[sl]], pts[k_t[sl]]
        u = pj - pi
        v = pk - pi
        w = pk - pj
        du = np.sqrt(np.sum(u * u, axis=1))
        dv = np.sqrt(np.sum(v * v, axis=1))
        dw = np.sqrt(np.sum(w * w, axis=1))
        base[sl] = 2.0 * wedge_norms(u, v) / (du * dv * dw)
        w3[sl] = speed[i_t[sl]] * speed[j_t[sl]] * speed[k_t[sl]]
        return None

    map_chunks(work, chunk_slices(i_t.size))
    return base, w3


def report(grid: SampleGrid, p: float, lam: float | None = None,
           base_w3: tuple[np.ndarray, np.ndarray] | None = None) -> EnergyReport:
    """Evaluate length, M_p, E_p, optionally E_p^lambda, and thickness.

    ``base_w3`` may pass precomputed strict-triple inverse circumradii and
    speed weights (as produced by the assembly stage) to skip the triple
    scan.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    speed = grid.speed
    h = grid.h
    len_ = float(h * np.sum(speed))

    _, _, c2 = _pair_tables(grid)
    kappa = _curvatures(grid)
    base, w3 = base_w3 if base_w3 is not None else _triple_bases(grid)

    base_max = float(base.max()) if base.size else 0.0
    bref = max(base_max, float(c2.max()), float(kappa.max()))
    thick = 1.0 / base_max if base_max > 0.0 else float("inf")

    if bref == 0.0:
        log_mp, mp = float("-inf"), 0.0
    else:
        acc = 6.0 * float(powp(base / bref, p) @ w3)
        w_pair = speed[:, None] * speed[None, :] ** 2
        acc += 3.0 * float(np.sum(powp(c2 / bref, p) * w_pair))
        acc += float(powp(kappa / bref, p) @ speed**3)
        log_mp = 3.0 * np.log(h) + p * np.log(bref) + np.log(acc)
        with np.errstate(over="ignore"):
            mp = float(np.exp(log_mp))

    ep = float(np.exp(log_mp / p + (p - 3.0) / p * np.log(len_)))
    ep_l = None
    if lam is not None:
        if lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {lam}")
        ep_l = float(np.exp(log_mp / p) + lam * len_)
    return EnergyReport(len_, mp, ep, thick, p, ep_l, lam, log_mp)


def energy_mp(grid: SampleGrid, p: float) -> float:
    """Discrete integral Menger curvature M_p (scales as r**(3-p))."""
    return report(grid, p).mp


def energy_ep(grid: SampleGrid, p: float) -> float:
    """Scale-invariant energy M_p^(1/p) * L^((p-3)/p)."""
    return report(grid, p).ep


def energy_ep_lambda(grid: SampleGrid, p: float, lam: float) -> float:
    """Length-penalized energy M_p^(1/p) + lambda * L."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    r = report(grid, p, lam)
    return float(r.ep_lambda)


def thickness(grid: SampleGrid) -> float:
    """Smallest circumradius over all distinct sample triples.

    Discrete stand-in for the tube thickness; it upper-bounds the true
    value only up to grid resolution.
    """
    _pair_tables(grid)  # coincidence check
    base, _ = _triple_bases(grid)
    base_max = float(base.max()) if base.size else 0.0
    return 1.0 / base_max if base_max > 0.0 else float("inf")


def diagonal_c(grid: SampleGrid, i: int, j: int) -> float:
    """Continuously extended integrand at a coincidence diagonal.

    For i != j this is the two-point value c(x_i, x_j, x_j); for i == j it
    is the classic local curvature at x_i.
    """
    m = grid.m_samples
    if not (0 <= i < m and 0 <= j < m):
        raise IndexError(f"sample indices out of range: ({i}, {j}) for M={m}")
    if i == j:
        return float(_curvatures(grid)[i])
    d = grid.points[j] - grid.points[i]
    dn2 = float(d @ d)
    if dn2 == 0.0:
        raise DegenerateKnotError(f"samples {i} and {j} coincide")
    w = np.cross(d, grid.d1[j])
    return float(2.0 * np.sqrt(w @ w) / (dn2 * grid.speed[j]))


def lambda_for_target_radius(p: float, r: float) -> float:
    """Penalty weight making the circle of radius r stationary for E_p^lambda.

    lambda = (2 pi)^((3-p)/p) * ((p-3)/p) * r^((3-2p)/p); requires p > 3.
    """
    if p <= 3:
        raise ValueError(f"the penalized stationary circle needs p > 3, got {p}")
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    return TWO_PI ** ((3.0 - p) / p) * ((p - 3.0) / p) * r ** ((3.0 - 2.0 * p) / p)


def radius_for_lambda(p: float, lam: float) -> float:
    """Inverse of :func:`lambda_for_target_radius` for fixed p > 3."""
    if p <= 3:
        raise ValueError(f"the penalized stationary circle needs p > 3, got {p}")
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return (TWO_PI ** ((p - 3.0) / p) * (p / (p - 3.0)) * lam) ** (p / (3.0 - 2.0 * p))
