"""Pointwise vector algebra and circumradius/curvature kernels.

Vectors are numpy arrays of shape ``(3,)`` (or stacks ``(..., 3)``; every
function broadcasts over leading axes).  These are the scalar reference
kernels; the energy and assembly modules inline vectorized variants of the
same formulas for their hot loops.
"""

from __future__ import annotations

import numpy as np

__all__ = ["dot", "wedge", "inv_circumradius", "local_curvature"]


def dot(a, b):
    """Euclidean scalar product a1*b1 + a2*b2 + a3*b3."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def wedge(a, b):
    """Cross product of two vectors in R^3 (antisymmetric, wedge(a, a) = 0)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack(
        (
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ),
        axis=-1,
    )


def norm(a):
    """Euclidean length |a|."""
    return np.sqrt(dot(a, a))


def inv_circumradius(x, y, z):
    """Inverse circumradius 1/R of three pairwise distinct points.

    Uses the wedge form 2|(Y-X) ^ (Z-X)| / (|Y-X| |X-Z| |Z-Y|), which is
    symmetric in its arguments and numerically preferable to the
    all-distances (Heron-style) expansion.  Collinear triples return 0
    (infinite radius); exact coincidence of two points is an error.

    Homogeneous of degree -1: inv_circumradius(rX, rY, rZ) = (1/r) * 1/R.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    dxy = norm(y - x)
    dxz = norm(z - x)
    dyz = norm(z - y)
    if np.any(dxy == 0.0) or np.any(dxz == 0.0) or np.any(dyz == 0.0):
        raise ValueError("circumradius undefined: two of the three points coincide")
    return 2.0 * norm(wedge(y - x, z - x)) / (dxy * dxz * dyz)


def local_curvature(d1, d2):
    """Classic local curvature |g' ^ g''| / |g'|^3 from curve derivatives.

    ``d1`` and ``d2`` are the first and second derivative vectors at a
    point of a regular curve; ``|d1| > 0`` is required.
    """
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    speed = norm(d1)
    if np.any(speed == 0.0):
        raise ValueError("curvature undefined at a non-regular point (|d1| = 0)")
    return norm(wedge(d1, d2)) / speed**3
