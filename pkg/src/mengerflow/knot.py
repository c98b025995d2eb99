"""Fourier-knot representation, sample grids and coefficient fitting.

A closed curve is stored as N pairs of R^3 cosine/sine coefficients

    gamma(x) = sum_{k=1..N} (a_k cos(kx) + b_k sin(kx)),

with the constant term pinned to zero (the curve's sampled centroid sits
at the origin).  A :class:`SampleGrid` caches the curve and its first two
derivatives at M equidistant parameters together with the sampled basis
tables consumed by the assembly stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "DegenerateKnotError",
    "FourierKnot",
    "SampleGrid",
    "evaluate",
    "build_grid",
    "fit_fourier",
    "scale",
    "default_samples",
    "circle",
    "save_coefficients",
    "load_coefficients",
    "load_polygon",
    "resample_polygon_arclength",
    "fourier_from_polygon",
]


class DegenerateKnotError(ValueError):
    """Raised when a sampled curve cannot feed the scheme.

    Either the parametrization is irregular at a sample (|gamma'| = 0) or
    two samples coincide, which would put a zero into a denominator.
    """


@dataclass(frozen=True)
class FourierKnot:
    """Trigonometric polynomial curve, constant term fixed to zero.

    cos_coeffs, sin_coeffs : (N, 3) float arrays holding a_k and b_k for
    k = 1..N.
    """

    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.array(self.cos_coeffs, dtype=float))
        b = np.atleast_2d(np.array(self.sin_coeffs, dtype=float))
        if a.shape != b.shape or a.ndim != 2 or a.shape[1] != 3 or a.shape[0] < 1:
            raise ValueError("coefficient arrays must both have shape (N, 3), N >= 1")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)

    @property
    def n_modes(self) -> int:
        return self.cos_coeffs.shape[0]


@dataclass(frozen=True)
class SampleGrid:
    """M equidistant samples x_i = i*h, h = 2*pi/M, with cached tables.

    ``basis_q[i, l]`` holds the l-th basis function at x_i, where
    l = 2k-2 is cos(k x) and l = 2k-1 is sin(k x); ``basis_dq`` and
    ``basis_ddq`` hold its first and second derivatives.  The tables are
    ``None`` for synthetic grids built from raw point data (the energy
    routines never touch them).
    """

    m_samples: int
    h: float
    points: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    basis_q: np.ndarray | None = None
    basis_dq: np.ndarray | None = None
    basis_ddq: np.ndarray | None = None
    min_speed: float = field(default=0.0)

    @property
    def speed(self) -> np.ndarray:
        return np.sqrt(np.sum(self.d1 * self.d1, axis=1))


def _mode_sum(a, b, x, order):
    """Accumulate modes k = 1..N in increasing k (fixed, reproducible order)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + (3,))
    for k in range(1, a.shape[0] + 1):
        ck = np.cos(k * x)[..., None]
        sk = np.sin(k * x)[..., None]
        ak = a[k - 1]
        bk = b[k - 1]
        if order == 0:
            out += ak * ck + bk * sk
        elif order == 1:
            out += (-k) * ak * sk + k * bk * ck
        else:
            out += (-k * k) * (ak * ck + bk * sk)
    return out


def evaluate(knot: FourierKnot, x, order: int = 0):
    """Value of gamma, gamma' or gamma'' at parameter x (2*pi-periodic).

    ``x`` may be a scalar or an array; the result has shape ``x.shape + (3,)``.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    return _mode_sum(knot.cos_coeffs, knot.sin_coeffs, x, order)


def basis_tables(n_modes: int, x: np.ndarray):
    """Sampled basis tables (q, q', q'') of shape (len(x), 2N)."""
    k = np.arange(1, n_modes + 1, dtype=float)
    kx = np.asarray(x, dtype=float)[:, None] * k[None, :]
    c, s = np.cos(kx), np.sin(kx)
    q = np.empty((len(x), 2 * n_modes))
    dq = np.empty_like(q)
    ddq = np.empty_like(q)
    q[:, 0::2], q[:, 1::2] = c, s
    dq[:, 0::2], dq[:, 1::2] = -k * s, k * c
    ddq[:, 0::2], ddq[:, 1::2] = -(k**2) * c, -(k**2) * s
    return q, dq, ddq


def build_grid(knot: FourierKnot, m_samples: int, *, check_regular: bool = True) -> SampleGrid:
    """Sample the knot at M >= 3 equidistant parameters with basis tables.

    Raises :class:`DegenerateKnotError` if |gamma'| vanishes at a sample.
    Pass ``check_regular=False`` when sampling a test direction rather
    than a curve (directions need not be regular).
    """
    if m_samples < 3:
        raise ValueError(f"need at least 3 samples, got {m_samples}")
    h = TWO_PI / m_samples
    x = np.arange(m_samples) * h
    points = _mode_sum(knot.cos_coeffs, knot.sin_coeffs, x, 0)
    d1 = _mode_sum(knot.cos_coeffs, knot.sin_coeffs, x, 1)
    d2 = _mode_sum(knot.cos_coeffs, knot.sin_coeffs, x, 2)
    speed = np.sqrt(np.sum(d1 * d1, axis=1))
    min_speed = float(speed.min())
    if check_regular and min_speed == 0.0:
        raise DegenerateKnotError("parametrization degenerate: |gamma'| = 0 at a sample")
    q, dq, ddq = basis_tables(knot.n_modes, x)
    return SampleGrid(m_samples, h, points, d1, d2, q, dq, ddq, min_speed)


def default_samples(n_modes: int) -> int:
    """Default grid size: comfortably above the 2N exactness threshold."""
    return max(8 * n_modes, 64)


def fit_fourier(points: np.ndarray, n_modes: int) -> FourierKnot:
    """Coefficients from M > 2N points sampled at x_i = i*2*pi/M.

    Discretizes a_k = (1/pi) integral gamma(t) cos(kt) dt by the
    trapezoidal rule, which is exact above the threshold, so sampling a
    knot and refitting round-trips.  The constant term is dropped, which
    translates the curve so the sample centroid maps to the origin.
    """
    points = np.asarray(points, dtype=float)
    m = points.shape[0]
    if m <= 2 * n_modes:
        raise ValueError(f"need more than 2N = {2 * n_modes} samples, got {m}")
    x = np.arange(m) * (TWO_PI / m)
    k = np.arange(1, n_modes + 1, dtype=float)
    kx = x[:, None] * k[None, :]
    scale_ = (TWO_PI / m) / np.pi
    a = scale_ * (np.cos(kx).T @ points)
    b = scale_ * (np.sin(kx).T @ points)
    return FourierKnot(a, b)


def scale(knot: FourierKnot, r: float) -> FourierKnot:
    """Dilated copy r*gamma; every coefficient is multiplied by r > 0."""
    if r <= 0:
        raise ValueError(f"scale factor must be positive, got {r}")
    return FourierKnot(r * knot.cos_coeffs, r * knot.sin_coeffs)


def circle(radius: float = 1.0) -> FourierKnot:
    """Circle of given radius in the xy-plane, stored exactly in mode 1."""
    a = np.zeros((1, 3))
    b = np.zeros((1, 3))
    a[0, 0] = radius
    b[0, 1] = radius
    return FourierKnot(a, b)


# -- file formats ------------------------------------------------------------

def save_coefficients(knot: FourierKnot, path) -> None:
    """Text format: first line N, then N lines 'ax ay az bx by bz'."""
    with open(path, "w") as fh:
        fh.write(f"{knot.n_modes}\n")
        for a, b in zip(knot.cos_coeffs, knot.sin_coeffs):
            fh.write(" ".join(f"{v:.17g}" for v in (*a, *b)) + "\n")


def load_coefficients(path) -> FourierKnot:
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"empty coefficient file: {path}")
    try:
        n = int(tokens[0])
        values = [float(t) for t in tokens[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed coefficient file {path}: {exc}") from None
    if n < 1 or len(values) != 6 * n:
        raise ValueError(
            f"coefficient file {path}: expected {6 * max(n, 1)} values for N={n}, "
            f"got {len(values)}"
        )
    rows = np.asarray(values).reshape(n, 6)
    return FourierKnot(rows[:, 0:3], rows[:, 3:6])


def load_polygon(path) -> np.ndarray:
    """Closed polygon as M lines of 'x y z' (last vertex joins the first)."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 coordinates, got {len(parts)}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric coordinate") from None
    if len(rows) < 3:
        raise ValueError(f"{path}: a closed polygon needs at least 3 vertices")
    return np.asarray(rows)


# -- polygon resampling ------------------------------------------------------

def resample_polygon_arclength(vertices: np.ndarray, n_out: int):
    """Place n_out points at equal arc spacing along a closed polygon.

    Returns ``(points, params)`` where ``params[m]`` in [0, 1) is the
    position of point m expressed in vertex units: integer part = edge
    index, fractional part = position inside that edge, divided by the
    vertex count.  The first output point is the first vertex; successive
    points are exactly L/n_out apart measured along the polygon.
    """
    vertices = np.asarray(vertices, dtype=float)
    n_in = vertices.shape[0]
    edges = np.roll(vertices, -1, axis=0) - vertices
    elen = np.sqrt(np.sum(edges * edges, axis=1))
    if np.any(elen == 0.0):
        raise ValueError("degenerate polygon: zero-length edge")
    cum = np.concatenate(([0.0], np.cumsum(elen)))
    total = cum[-1]
    targets = np.arange(n_out) * (total / n_out)
    edge_idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, n_in - 1)
    frac = (targets - cum[edge_idx]) / elen[edge_idx]
    points = vertices[edge_idx] + frac[:, None] * edges[edge_idx]
    params = (edge_idx + frac) / n_in
    return points, params


def fourier_from_polygon(vertices: np.ndarray, n_modes: int, m_fit: int | None = None) -> FourierKnot:
    """Fit a Fourier knot to a closed polygon via arclength resampling.

    The polygon is first resampled to ``m_fit`` (default 4N+1) points at
    equal arc spacing so the trapezoidal fit sees a near-arclength
    parametrization.
    """
    if m_fit is None:
        m_fit = 4 * n_modes + 1
    points, _ = resample_polygon_arclength(vertices, m_fit)
    return fit_fourier(points, n_modes)
