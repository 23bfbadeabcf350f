"""Shared instances and random-instance factories for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from nbpack import Family, SetFunction
from nbpack.setfn import popcount


def full_instance_3() -> SetFunction:
    """Three elements; unique best packing {{1,2},{3}} with weight 1.0."""
    return SetFunction.full(3, [0, 0.2, 0.2, 0.8, 0.2, 0.3, 0.6, 0.7])


def family_instance_4() -> SetFunction:
    """Feasible family on four elements; best packing {{1,2},{4}}, weight 3."""
    fam = Family.closed(4, [0b1111, 0b1000, 0b0011, 0b0101, 0b0110])
    return SetFunction.over_family(
        fam, {0b1111: 3.0, 0b1000: 2.0, 0b0011: 1.0, 0b0101: 1.0, 0b0110: 1.0}
    )


def random_full_instance(n: int, seed: int) -> SetFunction:
    rng = np.random.default_rng(seed)
    table = np.round(rng.random(1 << n), 6)
    table[0] = 0.0
    return SetFunction.full(n, table)


def random_family_instance(n: int, seed: int, extra: int = 8) -> SetFunction:
    """Random closed family: `extra` multi-element members plus the closure.

    Weights are nonnegative, scaled with cardinality so larger sets are
    sometimes but not always worth taking; about half the singletons stay
    at weight zero.
    """
    rng = np.random.default_rng(seed)
    pool = [m for m in range(1, 1 << n) if popcount(m) >= 2]
    count = min(extra, len(pool))
    picks = rng.choice(len(pool), size=count, replace=False)
    fam = Family.closed(n, [pool[int(p)] for p in picks])
    weights: dict[int, float] = {}
    for mask in fam.members:
        if mask == 0:
            continue
        if popcount(mask) == 1 and rng.random() < 0.5:
            continue
        weights[mask] = float(np.round(rng.random() * popcount(mask), 6))
    return SetFunction.over_family(fam, weights)


def random_vertex_choice(w: SetFunction, rng: np.random.Generator) -> dict[int, int]:
    """A random chosen-set map element -> containing feasible set."""
    chosen = {}
    for i in range(1, w.n + 1):
        bit = 1 << (i - 1)
        if w.mode == "full":
            options = [a for a in range(1, 1 << w.n) if a & bit]
        else:
            options = [m for m in w.family.members if m & bit]
        chosen[i] = int(options[rng.integers(len(options))])
    return chosen


def random_membership_rows(w: SetFunction, rng: np.random.Generator) -> np.ndarray:
    """A random interior membership matrix (each row a simplex point)."""
    if w.mode == "full":
        width = 1 << w.n
        masks = np.arange(width)
    else:
        width = len(w.family)
        masks = w.family.masks_array()
    q = np.zeros((w.n, width))
    for i in range(w.n):
        support = (masks & (1 << i)) != 0
        raw = rng.random(int(support.sum())) + 1e-3
        q[i, support] = raw / raw.sum()
    return q


@pytest.fixture
def ex2() -> SetFunction:
    return full_instance_3()


@pytest.fixture
def fam4() -> SetFunction:
    return family_instance_4()
