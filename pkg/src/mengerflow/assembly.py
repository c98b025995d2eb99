"""Discrete linear system of one implicit flow step.

One implicit Euler step in the Ritz-Galerkin basis solves, per spatial
component, ``(A + tau*B) c_next = rhs`` where A is the mass matrix
``h |gamma'| phi_a phi_b`` and B is the Galerkin matrix of the first
variation with the linearly occurring curve factors moved to the next
time step.  B is contracted from seven coefficient tables:

    B_ab = sum_i  s1_i q_i^a q_i^b + s2_i q'_i^a q'_i^b + s3_i q''_i^a q''_i^b
                 + s4_i (q'_i^a q''_i^b + q''_i^a q'_i^b)
         + sum_{i<j}  s5_ij (q_i^a q_j^b + q_j^a q_i^b) + s7_ij d_ij^a d_ij^b
         + sum_{i!=j} s6_ij (q'_i^a d_ij^b + q'_i^b d_ij^a)

with d_ij^c = q_i^c - q_j^c.  s1..s4 are per-sample vectors (their
contractions run through accumulated cosine/sine sums, the theta tables);
s5 and s7 are symmetric in (i, j) and live in packed upper-triangular
stores; s6 is genuinely asymmetric and kept as a full matrix, summed over
ordered pairs.

Powers are grouped base-first: every triple enters through
``(2 |X0| / (|d_ij| |d_jk| |d_ik|))**(p or p-2)`` and every pair through
``(2 |X1| / (|d|^2 |gamma'|))**(p or p-2)``, which keeps exponentials
tame for large p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._triples import chunk_slices, map_chunks, powp, strict_triples
from .knot import DegenerateKnotError, SampleGrid
from . import energy as energy_mod
from .variation import ep_lambda_weight, ep_weights

__all__ = [
    "pair_index",
    "triple_index",
    "PairTriples",
    "SigmaTables",
    "SystemMatrices",
    "build_pair_triples",
    "build_sigma",
    "build_theta",
    "theta_contract",
    "assemble",
]

ENERGY_KINDS = ("mp", "ep", "ep_lambda")


def pair_index(i: int, j: int) -> int:
    """Linear index of the pair (i, j) with 0 <= i <= j in packed storage."""
    if not 0 <= i <= j:
        raise ValueError(f"pair index needs 0 <= i <= j, got ({i}, {j})")
    return i + j * (j + 1) // 2


def triple_index(i: int, j: int, k: int) -> int:
    """Linear index of the strict triple (i, j, k), 0 <= i < j < k."""
    if not 0 <= i < j < k:
        raise ValueError(f"triple index needs 0 <= i < j < k, got ({i}, {j}, {k})")
    return i + (j - 1) * j // 2 + (k - 2) * (k - 1) * k // 6


def _strict_pair_linear(i, j):
    # packed index for strictly upper pairs i < j (no diagonal)
    return i + j * (j - 1) // 2


_INDEX_CACHE: dict[int, tuple] = {}


def _triple_pair_indices(m: int):
    """Cached gather/scatter index arrays for the strict triples of size m.

    Returns (pl_ab, pl_ac, pl_bc, sp_ab, sp_ac, sp_bc): positions of the
    triple's three pairs in the diagonal-inclusive store (pair_index) and
    in the strictly-upper store.
    """
    cached = _INDEX_CACHE.get(m)
    if cached is not None:
        return cached
    i_t, j_t, k_t = strict_triples(m)
    i64 = i_t.astype(np.int64)
    j64 = j_t.astype(np.int64)
    k64 = k_t.astype(np.int64)
    out = (
        i64 + j64 * (j64 + 1) // 2,
        i64 + k64 * (k64 + 1) // 2,
        j64 + k64 * (k64 + 1) // 2,
        i64 + j64 * (j64 - 1) // 2,
        i64 + k64 * (k64 - 1) // 2,
        j64 + k64 * (k64 - 1) // 2,
    )
    if m <= 512:
        _INDEX_CACHE[m] = out
    return out


@dataclass(frozen=True)
class PairTriples:
    """Packed pairwise and triple geometry of one sample set.

    dp, dp_norm : differences p_i - p_j and their norms for i <= j in
        pair_index order (diagonal entries are zero).
    x0 : |(p_j - p_i) ^ (p_k - p_i)| for strict triples in triple_index
        order; size (M-2)(M-1)M/6.
    x1 : full (M, M) matrix of |(p_i - p_j) ^ p'_i|.
    x2 : per-sample wedge p'_i ^ p''_i, shape (M, 3).
    """

    m_samples: int
    dp: np.ndarray
    dp_norm: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    x2: np.ndarray


def build_pair_triples(grid: SampleGrid) -> PairTriples:
    m = grid.m_samples
    pts = grid.points
    # enumerate pairs i <= j so that position l equals pair_index(i, j)
    counts = np.arange(1, m + 1)
    ju = np.repeat(np.arange(m), counts)
    block_off = np.repeat(np.arange(m) * (np.arange(m) + 1) // 2, counts)
    iu = np.arange(ju.size) - block_off
    dp = pts[iu] - pts[ju]
    dp_norm = np.sqrt(np.sum(dp * dp, axis=1))
    if np.any(dp_norm[iu != ju] == 0.0):
        raise DegenerateKnotError("coincident samples: the curve self-intersects at grid resolution")

    i_t, j_t, k_t = strict_triples(m)
    x0 = np.empty(i_t.size)

    def work(sl):
        u = pts[j_t[sl]] - pts[i_t[sl]]
        v = pts[k_t[sl]] - pts[i_t[sl]]
        cr = np.cross(u, v)
        x0[sl] = np.sqrt(np.sum(cr * cr, axis=1))
        return None

    map_chunks(work, chunk_slices(i_t.size))

    dvec = pts[:, None, :] - pts[None, :, :]
    cr = np.cross(dvec, grid.d1[:, None, :])
    x1 = np.sqrt(np.sum(cr * cr, axis=2))
    x2 = np.cross(grid.d1, grid.d2)
    return PairTriples(m, dp, dp_norm, x0, x1, x2)


@dataclass(frozen=True)
class SigmaTables:
    """Coefficient tables of the discrete first variation.

    s1..s4 have length M; s5 and s7 are packed strictly-upper pair stores
    of length M(M-1)/2; s6 is a full (M, M) matrix with zero diagonal.
    All entries carry the factor h^3 * tau.
    """

    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    s4: np.ndarray
    s5: np.ndarray
    s6: np.ndarray
    s7: np.ndarray

    def s5_matrix(self, m: int) -> np.ndarray:
        return _unpack_sym(self.s5, m)

    def s7_matrix(self, m: int) -> np.ndarray:
        return _unpack_sym(self.s7, m)


def _unpack_sym(packed: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros((m, m))
    iu, ju = np.triu_indices(m, 1)
    out[iu, ju] = packed[_strict_pair_linear(iu, ju)]
    out[ju, iu] = out[iu, ju]
    return out


@dataclass(frozen=True)
class TripleGeometry:
    """Per-strict-triple scalars shared by the energy and the sigma build.

    All dot products between the triple's difference vectors follow from
    the three distances by the law of cosines, so this is the complete
    triple geometry.
    """

    dab: np.ndarray
    dac: np.ndarray
    dbc: np.ndarray
    base: np.ndarray   # inverse circumradius 2|X0| / (dab dac dbc)
    w3: np.ndarray     # |p'_a| |p'_b| |p'_c|


def triple_geometry(grid: SampleGrid, pt: PairTriples) -> TripleGeometry:
    i_t, j_t, k_t = strict_triples(grid.m_samples)
    pl_ab, pl_ac, pl_bc, _, _, _ = _triple_pair_indices(grid.m_samples)
    speed = grid.speed
    dab = pt.dp_norm[pl_ab]
    dac = pt.dp_norm[pl_ac]
    dbc = pt.dp_norm[pl_bc]
    base = 2.0 * pt.x0 / (dab * dac * dbc)
    w3 = speed[i_t] * speed[j_t] * speed[k_t]
    return TripleGeometry(dab, dac, dbc, base, w3)


def build_sigma(grid: SampleGrid, pt: PairTriples, p: float, h: float, tau: float,
                tg: TripleGeometry | None = None) -> SigmaTables:
    """Fill the sigma tables for the M_p variation, factor h^3 * tau included.

    The strict-triple sums carry the symmetry factor 2 for the interior
    i <-> j exchange; the two-point coincidence terms carry the factor 3
    for the three possible positions of the doubled argument.  Both are
    baked into the numeric prefactors (24p, 6, 12p, ...), matching the
    displayed table formulas.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    m = grid.m_samples
    speed = grid.speed
    i_t, j_t, k_t = strict_triples(m)
    n_pairs = m * (m - 1) // 2
    if tg is None:
        tg = triple_geometry(grid, pt)

    pts = grid.points
    _, _, _, sp_ab, sp_ac, sp_bc = _triple_pair_indices(m)

    dab2 = tg.dab * tg.dab
    dac2 = tg.dac * tg.dac
    dbc2 = tg.dbc * tg.dbc
    bpm2 = powp(tg.base, p - 2.0)
    bp = bpm2 * tg.base * tg.base
    w3 = tg.w3

    def scat_pt(idx, w):
        return np.bincount(idx, weights=w, minlength=m)

    def scat_pair(idx, w):
        return np.bincount(idx, weights=w, minlength=n_pairs)

    # s1: 24p * base^(p-2) * w3 / (d(centre,other1)^2 d(centre,other2)^2)
    f1 = 24.0 * p * bpm2 * w3
    s1 = scat_pt(i_t, f1 / (dab2 * dac2))
    s1 += scat_pt(j_t, f1 / (dab2 * dbc2))
    s1 += scat_pt(k_t, f1 / (dac2 * dbc2))

    # s2 (triple part): 6 * base^p * |p'_j| |p'_k| / |p'_centre|
    f2 = 6.0 * bp * w3
    s2 = scat_pt(i_t, f2 / speed[i_t] ** 2)
    s2 += scat_pt(j_t, f2 / speed[j_t] ** 2)
    s2 += scat_pt(k_t, f2 / speed[k_t] ** 2)

    # s5: -24p * base^(p-2) * w3 / prod d^2 * (dp_jk . dp_ik), per pair.
    # With u = p_b - p_a, v = p_c - p_a, w = p_c - p_b the three dot
    # products follow from the distances alone.
    dot_uv = 0.5 * (dab2 + dac2 - dbc2)
    dot_uw = dot_uv - dab2
    dot_vw = dac2 - dot_uv
    f5 = -24.0 * p * bpm2 * w3 / (dab2 * dac2 * dbc2)
    s5 = scat_pair(sp_ab, f5 * dot_vw)
    s5 += scat_pair(sp_ac, f5 * -dot_uw)
    s5 += scat_pair(sp_bc, f5 * dot_uv)

    # s7 (triple part): -6p * base^p * w3 / d_pair^2
    f7 = -6.0 * p * bp * w3
    s7 = scat_pair(sp_ab, f7 / dab2)
    s7 += scat_pair(sp_ac, f7 / dac2)
    s7 += scat_pair(sp_bc, f7 / dbc2)

    # pairwise tables over the full (M, M) grid
    dn = np.zeros((m, m))
    iu, ju = np.triu_indices(m)
    dn[iu, ju] = pt.dp_norm[pair_index_arr(iu, ju)]
    dn[ju, iu] = dn[iu, ju]
    dn2 = dn * dn
    np.fill_diagonal(dn2, 1.0)  # diagonal never used

    # base2[i, j] = 2 |X1_ij| / (|d_ij|^2 |p'_i|), the doubled-at-i extension
    base2 = 2.0 * pt.x1 / (dn2 * speed[:, None])
    np.fill_diagonal(base2, 0.0)
    b2p = powp(base2, p)
    b2pm2 = powp(base2, p - 2.0)
    np.fill_diagonal(b2p, 0.0)
    np.fill_diagonal(b2pm2, 0.0)

    # s2 (pair part): rows sum over j != i of the three two-point groups
    s2 += (
        3.0 * np.sum(b2p.T * speed[None, :] ** 2, axis=1) / speed
        - 3.0 * (p - 2.0) * np.sum(b2p * speed[None, :], axis=1)
        + 12.0 * p * np.sum(b2pm2 * speed[None, :] / dn2, axis=1)
    )

    # s2/s3/s4 (diagonal part): three-point coincidence at each sample
    nx2 = np.sqrt(np.sum(pt.x2 * pt.x2, axis=1))
    kappa = nx2 / speed**3
    kp = powp(kappa, p)
    kpm2 = powp(kappa, p - 2.0)
    d2sq = np.sum(grid.d2 * grid.d2, axis=1)
    dot12 = np.sum(grid.d1 * grid.d2, axis=1)
    s2 += (3.0 - 3.0 * p) * kp * speed + p * kpm2 * d2sq / speed**3
    s3 = p * kpm2 / speed
    s4 = -p * kpm2 * dot12 / speed**3

    # s6 (full): -12p * base2^(p-2) * |p'_j| / d^4 * (dp_ij . p'_i)
    dvec = pts[:, None, :] - pts[None, :, :]
    dp_dot_t = np.sum(dvec * grid.d1[:, None, :], axis=2)
    s6 = -12.0 * p * b2pm2 * speed[None, :] / dn2**2 * dp_dot_t
    np.fill_diagonal(s6, 0.0)

    # s7 (pair part): both orientations of the two-point terms
    b2p_t = b2p.T
    b2pm2_t = b2pm2.T
    pair_term = (
        -6.0 * p * (b2p_t * speed[None, :] ** 2 * speed[:, None]
                    + b2p * speed[:, None] ** 2 * speed[None, :]) / dn2
        + 12.0 * p * (b2pm2_t * speed[None, :] ** 2 * speed[:, None]
                      + b2pm2 * speed[:, None] ** 2 * speed[None, :]) / dn2**2
    )
    iu, ju = np.triu_indices(m, 1)
    s7[_strict_pair_linear(iu, ju)] += pair_term[iu, ju]

    f = h**3 * tau
    return SigmaTables(f * s1, f * s2, f * s3, f * s4, f * s5, f * s6, f * s7)


def pair_index_arr(i, j):
    """Vectorized pair_index for arrays with i <= j elementwise."""
    j64 = j.astype(np.int64)
    return i.astype(np.int64) + j64 * (j64 + 1) // 2


def build_theta(sigma: np.ndarray, n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    """Accumulated sums sum_i sigma_i cos(k x_i), sin(k x_i), k = 0..2N.

    These 4N+1 numbers reconstruct every same-index basis-product
    contraction sum_i sigma_i q_i^a q_i^b through the product-to-sum
    identities; the k = 0 sine sum is identically zero and skipped.
    """
    m = sigma.shape[0]
    x = np.arange(m) * (2.0 * np.pi / m)
    k = np.arange(2 * n_modes + 1, dtype=float)
    kx = k[:, None] * x[None, :]
    theta_cos = np.cos(kx) @ sigma
    theta_sin = np.empty_like(theta_cos)
    theta_sin[0] = 0.0
    if n_modes > 0:
        theta_sin[1:] = np.sin(kx[1:]) @ sigma
    return theta_cos, theta_sin


def _derivative_parts(n_modes: int, order: int):
    """(coefficient, is_sin, frequency) of each basis column's derivative."""
    k = np.arange(1, n_modes + 1, dtype=float)
    coef = np.empty(2 * n_modes)
    is_sin = np.empty(2 * n_modes, dtype=bool)
    freq = np.empty(2 * n_modes)
    freq[0::2] = k
    freq[1::2] = k
    if order == 0:
        coef[0::2], is_sin[0::2] = 1.0, False
        coef[1::2], is_sin[1::2] = 1.0, True
    elif order == 1:
        coef[0::2], is_sin[0::2] = -k, True
        coef[1::2], is_sin[1::2] = k, False
    else:
        coef[0::2], is_sin[0::2] = -(k**2), False
        coef[1::2], is_sin[1::2] = -(k**2), True
    return coef, is_sin, freq


def theta_contract(theta: tuple[np.ndarray, np.ndarray], n_modes: int,
                   order_a: int = 0, order_b: int = 0) -> np.ndarray:
    """(2N, 2N) matrix of sum_i sigma_i phi_a^(da)(x_i) phi_b^(db)(x_i).

    Each derivative is a single cosine or sine with a scalar prefactor, so
    the product collapses to two theta lookups at |fa - fb| and fa + fb.
    """
    tc, ts = theta
    ca, sa, fa = _derivative_parts(n_modes, order_a)
    cb, sb, fb = _derivative_parts(n_modes, order_b)
    fd = fa[:, None] - fb[None, :]
    fs = (fa[:, None] + fb[None, :]).astype(int)
    fd_abs = np.abs(fd).astype(int)
    sign_d = np.sign(fd)

    both_cos = (~sa[:, None]) & (~sb[None, :])
    both_sin = sa[:, None] & sb[None, :]
    sin_cos = sa[:, None] & (~sb[None, :])
    cos_sin = (~sa[:, None]) & sb[None, :]

    out = np.zeros((2 * n_modes, 2 * n_modes))
    out[both_cos] = 0.5 * (tc[fd_abs[both_cos]] + tc[fs[both_cos]])
    out[both_sin] = 0.5 * (tc[fd_abs[both_sin]] - tc[fs[both_sin]])
    out[sin_cos] = 0.5 * (sign_d[sin_cos] * ts[fd_abs[sin_cos]] + ts[fs[sin_cos]])
    out[cos_sin] = 0.5 * (-sign_d[cos_sin] * ts[fd_abs[cos_sin]] + ts[fs[cos_sin]])
    return (ca[:, None] * cb[None, :]) * out


@dataclass(frozen=True)
class SystemMatrices:
    """Mass matrix A, variation matrix B (tau-free) and right-hand sides.

    The step system is S = A + tau * B; keeping B tau-free lets the
    adaptive step-size choice pick tau after assembly.  rhs has one row
    per spatial component.
    """

    a: np.ndarray
    b: np.ndarray
    rhs: np.ndarray

    def s(self, tau: float) -> np.ndarray:
        return self.a + tau * self.b


def _mirror_upper(mat: np.ndarray) -> np.ndarray:
    # exact symmetry: keep the upper triangle, mirror it below
    upper = np.triu(mat)
    return upper + np.triu(mat, 1).T


def assemble(grid: SampleGrid, p: float, energy_kind: str = "mp",
             lam: float | None = None, rep=None,
             pt: PairTriples | None = None,
             tg: TripleGeometry | None = None) -> SystemMatrices:
    """Build A, tau-free B and right-hand sides for one implicit step.

    ``energy_kind`` selects the flowed energy: the raw M_p variation, the
    scale-invariant E_p (M_p and length variations mixed with the current
    energy values as weights) or the length-penalized E_p^lambda.  ``rep``,
    ``pt`` and ``tg`` may pass precomputed pieces so the per-step triple
    scan runs only once.
    """
    if energy_kind not in ENERGY_KINDS:
        raise ValueError(f"energy_kind must be one of {ENERGY_KINDS}, got {energy_kind!r}")
    if energy_kind == "ep_lambda":
        if lam is None or lam <= 0:
            raise ValueError("energy_kind 'ep_lambda' needs lambda > 0")
    if grid.basis_q is None:
        raise ValueError("grid carries no basis tables; build it from a FourierKnot")

    m = grid.m_samples
    n_modes = grid.basis_q.shape[1] // 2
    h = grid.h
    speed = grid.speed
    q, dq, ddq = grid.basis_q, grid.basis_dq, grid.basis_ddq

    a_mat = _mirror_upper(q.T @ (h * speed[:, None] * q))
    rhs = (h * speed[:, None] * grid.points).T @ q

    if pt is None:
        pt = build_pair_triples(grid)
    sig = build_sigma(grid, pt, p, h, 1.0, tg=tg)

    b_mat = theta_contract(build_theta(sig.s1, n_modes), n_modes, 0, 0)
    b_mat += theta_contract(build_theta(sig.s2, n_modes), n_modes, 1, 1)
    b_mat += theta_contract(build_theta(sig.s3, n_modes), n_modes, 2, 2)
    t4 = theta_contract(build_theta(sig.s4, n_modes), n_modes, 1, 2)
    b_mat += t4 + t4.T

    s5 = sig.s5_matrix(m)
    b_mat += q.T @ s5 @ q

    s6 = sig.s6
    z = dq.T @ (np.diag(np.sum(s6, axis=1)) - s6) @ q
    b_mat += z + z.T

    s7 = sig.s7_matrix(m)
    b_mat += q.T @ (np.diag(np.sum(s7, axis=1)) - s7) @ q

    if energy_kind != "mp":
        if rep is None:
            rep = energy_mod.report(grid, p, lam)
        a_len = dq.T @ ((h / speed)[:, None] * dq)
        if energy_kind == "ep":
            c_mp, c_len = ep_weights(rep)
        else:
            c_mp, c_len = ep_lambda_weight(rep), lam
        b_mat = c_mp * b_mat + c_len * a_len

    return SystemMatrices(a_mat, _mirror_upper(b_mat), rhs)
