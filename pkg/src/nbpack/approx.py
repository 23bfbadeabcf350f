"""Best bounded-degree approximation over partitions, and the partition
enumerator both it and the oracle rely on.

The approximation fits Mobius coefficients supported on subsets of size at
most k so that the partition function F_k(P) = sum of fitted coefficients
over subsets lying inside a block matches F(P) in least squares over all
Bell(n) partitions. Fitted values are unique; the coefficients are not, since
every singleton column is the all-ones vector (a gauge continuum).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .cover import PartitionProfile
from .setfn import SetFunction, SubsetId, popcount

ENUMERATION_MAX_N = 12
APPROX_MAX_N = 8


def enumerate_partitions(n: int) -> Iterator[PartitionProfile]:
    """Every partition of {1..n} exactly once, in lexicographic order of the
    restricted growth string (element -> block label)."""
    if not 1 <= n <= ENUMERATION_MAX_N:
        raise ValueError(f"partition enumeration supports 1 <= n <= {ENUMERATION_MAX_N}")
    labels = [0] * n

    def rec(i: int, top: int) -> Iterator[PartitionProfile]:
        if i == n:
            blocks: dict[int, int] = {}
            for e, lab in enumerate(labels):
                blocks[lab] = blocks.get(lab, 0) | (1 << e)
            yield PartitionProfile(n, tuple(blocks.values()))
            return
        for lab in range(top + 2):
            labels[i] = lab
            yield from rec(i + 1, max(top, lab))

    yield from rec(1, 0)


def bell_number(n: int) -> int:
    """Count of partitions of an n-set, by the triangle recurrence."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


@dataclass
class ApproxResult:
    k: int
    mu_k: dict[SubsetId, float]
    values_on_partitions: np.ndarray
    partition_weights: np.ndarray
    residual: float


def k_degree_approx(w: SetFunction, k: int, strategy: str = "min_norm") -> ApproxResult:
    """Least-squares fit of degree-limited Mobius coefficients against the
    partition weights. min_norm keeps every column and takes the minimum-norm
    solution; pin_singletons zeroes all singleton coefficients except the
    first, removing the gauge freedom differently. Both give identical fitted
    values."""
    if w.mode != "full":
        raise ValueError("degree approximation needs a full-domain instance")
    if w.n > APPROX_MAX_N:
        raise ValueError(f"degree approximation supports n <= {APPROX_MAX_N}")
    if not 1 <= k <= w.n:
        raise ValueError(f"degree bound must satisfy 1 <= k <= {w.n}")
    if strategy not in ("min_norm", "pin_singletons"):
        raise ValueError(f"unknown strategy {strategy!r}")

    cols = [a for a in range(1, 1 << w.n) if popcount(a) <= k]
    partitions = list(enumerate_partitions(w.n))
    targets = np.array([p.weight_total(w) for p in partitions])
    matrix = np.zeros((len(partitions), len(cols)))
    for r, p in enumerate(partitions):
        for c, a in enumerate(cols):
            if any((a & ~b) == 0 for b in p.blocks):
                matrix[r, c] = 1.0

    if strategy == "pin_singletons":
        keep = [c for c, a in enumerate(cols) if popcount(a) != 1 or a == 1]
        solution = np.zeros(len(cols))
        sol, *_ = np.linalg.lstsq(matrix[:, keep], targets, rcond=None)
        solution[keep] = sol
    else:
        solution, *_ = np.linalg.lstsq(matrix, targets, rcond=None)

    fitted = matrix @ solution
    residual = float(np.sum((targets - fitted) ** 2))
    return ApproxResult(
        k=k,
        mu_k={a: float(v) for a, v in zip(cols, solution)},
        values_on_partitions=fitted,
        partition_weights=targets,
        residual=residual,
    )
