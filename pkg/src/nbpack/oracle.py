"""Exhaustive ground truth at desk scale: partition enumeration, weight
extremes, and the complete set of locally maximal partitions.

Local maximality here is decided by a closed form, independent of the
gradient kernels: at a partition, an element's deviation to any other set
materializes only its own singleton worth, so block A survives all deviations
exactly when w(A) >= w({i}) + (Mobius mass of feasible subsets of A without i)
for every member i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .approx import enumerate_partitions
from .cover import PartitionProfile
from .setfn import SetFunction, SubsetId, elements_of, popcount, resolve_tolerance

FULL_ORACLE_MAX_N = 10
FAMILY_ORACLE_MAX_NODES = 10_000_000


class OracleSizeError(RuntimeError):
    """Raised when exhaustive enumeration would exceed the size guard."""


@dataclass
class OracleReport:
    best_partition: PartitionProfile
    best_weight: float
    worst_weight: float
    all_local_maximizers: list[PartitionProfile]
    count_enumerated: int


def partition_is_local_max(
    w: SetFunction, blocks: tuple[SubsetId, ...], tol: float | None = None
) -> bool:
    """Closed-form local-maximality test for a partition's vertex profile."""
    tol = resolve_tolerance(tol)
    for block in blocks:
        if popcount(block) <= 1:
            continue
        wa = w.zeta_below(block)
        for i in elements_of(block):
            alone = w.weight(1 << (i - 1))
            if wa < alone + w.zeta_below(block & ~(1 << (i - 1))) - tol:
                return False
    return True


def _feasible_partitions(w: SetFunction) -> list[tuple[SubsetId, ...]]:
    """All partitions of the ground set into feasible blocks, by branching on
    the smallest uncovered element."""
    family = w.family
    ground = (1 << w.n) - 1
    members = [m for m in family.members if m != 0]
    by_lowest: dict[int, list[SubsetId]] = {}
    for m in members:
        low = (m & -m).bit_length() - 1
        by_lowest.setdefault(low, []).append(m)
    out: list[tuple[SubsetId, ...]] = []
    nodes = 0

    def rec(covered: SubsetId, acc: list[SubsetId]) -> None:
        nonlocal nodes
        nodes += 1
        if nodes > FAMILY_ORACLE_MAX_NODES:
            raise OracleSizeError(
                f"feasible-partition search exceeded {FAMILY_ORACLE_MAX_NODES} nodes"
            )
        if covered == ground:
            out.append(tuple(sorted(acc)))
            return
        low = ((~covered) & -(~covered)).bit_length() - 1
        for m in by_lowest.get(low, []):
            if m & covered:
                continue
            acc.append(m)
            rec(covered | m, acc)
            acc.pop()

    rec(0, [])
    return out


def oracle_best_partition(w: SetFunction, tol: float | None = None) -> OracleReport:
    """Enumerate every admissible partition, track the weight extremes, and
    collect all local maximizers. Guarded by size limits."""
    tol = resolve_tolerance(tol)
    if w.mode == "full":
        if w.n > FULL_ORACLE_MAX_N:
            raise OracleSizeError(f"full-mode oracle supports n <= {FULL_ORACLE_MAX_N}")
        all_blocks = (tuple(p.blocks) for p in enumerate_partitions(w.n))
    else:
        all_blocks = iter(_feasible_partitions(w))

    values = w.values()

    def weight_of(blocks: tuple[SubsetId, ...]) -> float:
        if w.mode == "full":
            return float(sum(values[b] for b in blocks))
        return float(sum(values[w.family.index[b]] for b in blocks))

    best: tuple[SubsetId, ...] | None = None
    best_w = -np.inf
    worst_w = np.inf
    maximizers: list[PartitionProfile] = []
    count = 0
    for blocks in all_blocks:
        count += 1
        total = weight_of(blocks)
        if total > best_w:
            best_w, best = total, blocks
        worst_w = min(worst_w, total)
        if partition_is_local_max(w, blocks, tol):
            maximizers.append(PartitionProfile(w.n, blocks))
    return OracleReport(
        best_partition=PartitionProfile(w.n, best),
        best_weight=best_w,
        worst_weight=worst_w,
        all_local_maximizers=maximizers,
        count_enumerated=count,
    )
