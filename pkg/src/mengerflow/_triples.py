"""Shared machinery for sums over strict sample triples i < j < k.

The triple loops behind the energy, the first variation and the sigma
tables all run over the same index set.  Enumeration arrays are cached per
grid size and processed in fixed-size chunks so memory stays bounded and
the summation order is reproducible.  Setting the environment variable
``MENGER_THREADS`` to an integer > 1 evaluates chunks on a thread pool;
partial results are always combined in chunk order, so results are
bitwise identical to the sequential run.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 1 << 18

_TRIPLE_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def triple_count(m: int) -> int:
    """Number of strict triples i < j < k below m: (m-2)(m-1)m/6."""
    return (m - 2) * (m - 1) * m // 6


def strict_triples(m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index arrays (i, j, k) of all strict triples, in linear-index order.

    Position t in the returned arrays satisfies
    t == i + (j-1)j/2 + (k-2)(k-1)k/6, i.e. the packed triangular layout.
    """
    cached = _TRIPLE_CACHE.get(m)
    if cached is not None:
        return cached
    if m < 3:
        empty = np.zeros(0, dtype=np.int32)
        out = (empty, empty.copy(), empty.copy())
    else:
        # strict pairs (i < j) in packed order: j repeated j times, i = 0..j-1
        j_pair = np.repeat(np.arange(m, dtype=np.int32), np.arange(m))
        off = np.concatenate(([0], np.cumsum(np.arange(m))))
        i_pair = (np.arange(j_pair.size) - np.repeat(off[:-1], np.arange(m))).astype(np.int32)
        # for each k the admissible pairs are exactly the first k(k-1)/2 ones
        npairs_below = (np.arange(m, dtype=np.int64) * (np.arange(m) - 1)) // 2
        k_t = np.repeat(np.arange(m, dtype=np.int32), npairs_below)
        off_k = np.concatenate(([0], np.cumsum(npairs_below)))
        pos = np.arange(off_k[-1], dtype=np.int64) - np.repeat(off_k[:-1], npairs_below)
        out = (i_pair[pos], j_pair[pos], k_t)
    if m <= 512:
        _TRIPLE_CACHE[m] = out
    return out


def chunk_slices(total: int, chunk: int = CHUNK) -> list[slice]:
    return [slice(s, min(s + chunk, total)) for s in range(0, total, chunk)]


def thread_count() -> int:
    raw = os.environ.get("MENGER_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n <= 1:
        return 1
    return n


def map_chunks(fn, slices):
    """Apply ``fn`` to every slice, honouring MENGER_THREADS.

    Returns the per-chunk results in slice order regardless of how they
    were scheduled.
    """
    n = thread_count()
    if n <= 1 or len(slices) <= 1:
        return [fn(sl) for sl in slices]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, slices))


def wedge_norms(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise |u ^ v| for (n, 3) stacks."""
    w0 = u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1]
    w1 = u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2]
    w2 = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    return np.sqrt(w0 * w0 + w1 * w1 + w2 * w2)


def powp(base: np.ndarray, p: float) -> np.ndarray:
    """Elementwise base**p for base >= 0 with a 0 -> 0 short circuit.

    For non-integral exponents uses exp(p * log(base)), which is markedly
    faster than ``pow`` for bases near 1 and behaves identically.
    """
    base = np.asarray(base, dtype=float)
    if float(p).is_integer():
        return base ** int(p)
    out = np.zeros_like(base)
    pos = base > 0.0
    out[pos] = np.exp(p * np.log(base[pos]))
    return out
