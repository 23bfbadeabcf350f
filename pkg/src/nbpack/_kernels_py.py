"""Numpy fallback for the hot numerical kernels.

Same signatures as the compiled module: dense tables are float64 arrays of
length 2**n indexed by subset mask, membership matrices are (n, columns)
float64 with rows ordered by element. Transforms accumulate in extended
precision so the mobius/zeta roundtrip stays exact to ~1e-15 even at n=12.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def mobius_dense(table: np.ndarray, n: int) -> np.ndarray:
    """Mobius transform of a dense table: out[A] = sum_{B<=A} (-1)^|A\\B| t[B]."""
    work = np.asarray(table, dtype=np.longdouble).copy()
    for k in range(n):
        half = 1 << k
        w = work.reshape(-1, 2, half)
        w[:, 1, :] -= w[:, 0, :]
    return work.astype(np.float64)


def zeta_dense(table: np.ndarray, n: int) -> np.ndarray:
    """Zeta transform of a dense table: out[A] = sum_{B<=A} t[B]."""
    work = np.asarray(table, dtype=np.longdouble).copy()
    for k in range(n):
        half = 1 << k
        w = work.reshape(-1, 2, half)
        w[:, 1, :] += w[:, 0, :]
    return work.astype(np.float64)


def _compact_coeffs(mu: np.ndarray, mask: int, size: int) -> np.ndarray:
    # mu values on submasks of mask, laid out by compact (pdep) index; the
    # expansion map is order-preserving so a sorted-submask gather suffices.
    all_masks = np.arange(size)
    return mu[all_masks[(all_masks & ~mask) == 0]].copy()


def _fold_all(c: np.ndarray, xs: list[float]) -> float:
    # evaluate sum_B c[B] * prod_{j in B} xs[j] by folding one bit at a time
    for x in xs:
        pair = c.reshape(-1, 2)
        c = pair[:, 0] + x * pair[:, 1]
    return float(c[0])


def worth_dense(q: np.ndarray, mu: np.ndarray) -> float:
    """Global worth: sum over columns A of the extension value at q[:, A]."""
    n = q.shape[0]
    size = 1 << n
    total = 0.0
    for a in range(1, size):
        bits = [p for p in range(n) if (a >> p) & 1]
        c = _compact_coeffs(mu, a, size)
        total += _fold_all(c, [q[p, a] for p in bits])
    return total


def grad_dense(q: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Per-element derivative rows: G[i-1, A] = w_{q_{-i}}(A) for i in A."""
    n = q.shape[0]
    size = 1 << n
    out = np.zeros((n, size))
    for a in range(1, size):
        bits = [p for p in range(n) if (a >> p) & 1]
        k = len(bits)
        c = _compact_coeffs(mu, a, size)
        xs = [q[p, a] for p in bits]
        for j, p in enumerate(bits):
            t = c.reshape([2] * k)
            t = np.moveaxis(t, k - 1 - j, 0).reshape(2, -1)
            for x in (xs[jj] for jj in range(k) if jj != j):
                trip = t.reshape(2, -1, 2)
                t = trip[:, :, 0] + x * trip[:, :, 1]
            out[p, a] = t[1, 0]
    return out


def worth_family(
    q: np.ndarray,
    mu: np.ndarray,
    sub_ptr: np.ndarray,
    sub_idx: np.ndarray,
    elem_ptr: np.ndarray,
    elem_idx: np.ndarray,
) -> float:
    """Family worth: sum over member columns A of sum_{B<=A feasible} mu(B)*prod."""
    total = 0.0
    for a in range(mu.shape[0]):
        for b in sub_idx[sub_ptr[a] : sub_ptr[a + 1]]:
            es = elem_idx[elem_ptr[b] : elem_ptr[b + 1]]
            if es.size == 0:
                continue
            total += mu[b] * q[es, a].prod()
    return float(total)


def grad_family(
    q: np.ndarray,
    mu: np.ndarray,
    sub_ptr: np.ndarray,
    sub_idx: np.ndarray,
    elem_ptr: np.ndarray,
    elem_idx: np.ndarray,
) -> np.ndarray:
    """Family derivative rows: G[i-1, a] over member columns, 0 when i not in A."""
    out = np.zeros_like(q)
    for a in range(mu.shape[0]):
        for b in sub_idx[sub_ptr[a] : sub_ptr[a + 1]]:
            es = elem_idx[elem_ptr[b] : elem_ptr[b + 1]]
            if es.size == 0:
                continue
            vals = q[es, a]
            pre = np.concatenate(([1.0], np.cumprod(vals[:-1])))
            suf = np.concatenate((np.cumprod(vals[:0:-1])[::-1], [1.0]))
            out[es, a] += mu[b] * pre * suf
    return out
