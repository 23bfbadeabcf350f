"""Subset algebra, set functions, Mobius and zeta transforms, feasible
families, and the intersection-count cost function.

Subsets of the ground set N = {1..n} are n-bit masks: bit i-1 set iff element
i is a member. Dense full-domain tables are indexed by mask; family-domain
values are arrays parallel to Family.members.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from ._backend import mobius_dense, zeta_dense

FULL_MODE_MAX_N = 16
FAMILY_MODE_MAX_N = 64
FAMILY_MAX_MEMBERS = 4096

SubsetId = int


class InstanceFormatError(ValueError):
    """Raised for malformed instance or profile payloads."""


def default_tolerance() -> float:
    """Comparison tolerance; NBP_TOL overrides the 1e-9 default."""
    return float(os.environ.get("NBP_TOL", "1e-9"))


def resolve_tolerance(tol: float | None) -> float:
    return default_tolerance() if tol is None else float(tol)


# -- mask helpers -----------------------------------------------------------


def popcount(mask: SubsetId) -> int:
    """Cardinality of the subset encoded by mask."""
    return mask.bit_count()


def mask_from_elements(elements: Iterable[int], n: int) -> SubsetId:
    """Mask of a 1-based element list; validates the 1..n range."""
    mask = 0
    for e in elements:
        if not 1 <= int(e) <= n:
            raise InstanceFormatError(f"element {e} outside 1..{n}")
        mask |= 1 << (int(e) - 1)
    return mask

def elements_of(mask: SubsetId) -> list[int]:
    """Sorted 1-based element list of a mask."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def iter_submasks(mask: SubsetId) -> Iterator[SubsetId]:
    """All submasks of mask, descending, including mask and 0."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


# -- feasible families ------------------------------------------------------


class Family:
    """A closed feasible family: the empty set and all singletons are present
    (inserted with synthetic=True when missing) so every element has a
    nonempty membership slice and extraction to singletons is always legal.

    Members are stored sorted by (cardinality, mask); active flags are the
    only mutable state and belong to a single search at a time.
    """

    def __init__(self, n: int, members: list[SubsetId], synthetic: list[bool]):
        if not 1 <= n <= FAMILY_MODE_MAX_N:
            raise InstanceFormatError(f"family mode supports 1 <= n <= {FAMILY_MODE_MAX_N}")
        if len(members) > FAMILY_MAX_MEMBERS:
            raise InstanceFormatError(f"family size {len(members)} exceeds {FAMILY_MAX_MEMBERS}")
        order = sorted(range(len(members)), key=lambda k: (popcount(members[k]), members[k]))
        self.n = n
        self.members: list[SubsetId] = [members[k] for k in order]
        self.synthetic = np.array([synthetic[k] for k in order], dtype=bool)
        self.index: dict[SubsetId, int] = {m: p for p, m in enumerate(self.members)}
        if len(self.index) != len(self.members):
            raise InstanceFormatError("duplicate family members")
        if self.members[0] != 0:
            raise InstanceFormatError("family closure must include the empty set")
        for i in range(1, n + 1):
            if (1 << (i - 1)) not in self.index:
                raise InstanceFormatError(f"family closure must include singleton {{{i}}}")
        self.active = np.ones(len(self.members), dtype=bool)
        self._masks = np.array(self.members, dtype=np.int64)
        self.per_element: list[np.ndarray] = [
            np.nonzero((self._masks >> i) & 1)[0].astype(np.int32) for i in range(n)
        ]
        self.sub_ptr, self.sub_idx = self._subset_csr()
        self.elem_ptr, self.elem_idx = self._element_csr()

    @classmethod
    def closed(cls, n: int, members: Iterable[SubsetId]) -> "Family":
        """Close an arbitrary member list under the empty-set and singleton
        convention, tagging the inserted members as synthetic."""
        given = list(members)
        seen = set(given)
        if len(seen) != len(given):
            raise InstanceFormatError("duplicate family members")
        masks = list(given)
        synthetic = [False] * len(masks)
        for extra in [0] + [1 << i for i in range(n)]:
            if extra not in seen:
                masks.append(extra)
                synthetic.append(True)
        return cls(n, masks, synthetic)

    def _subset_csr(self) -> tuple[np.ndarray, np.ndarray]:
        # positions b with members[b] a subset of members[a], per member a
        ptr = [0]
        idx: list[np.ndarray] = []
        for mask in self.members:
            subs = np.nonzero((self._masks & ~mask) == 0)[0]
            idx.append(subs.astype(np.int32))
            ptr.append(ptr[-1] + len(subs))
        return np.array(ptr, dtype=np.int32), (
            np.concatenate(idx) if idx else np.zeros(0, dtype=np.int32)
        )

    def _element_csr(self) -> tuple[np.ndarray, np.ndarray]:
        ptr = [0]
        idx: list[int] = []
        for mask in self.members:
            rows = [e - 1 for e in elements_of(mask)]
            idx.extend(rows)
            ptr.append(len(idx))
        return np.array(ptr, dtype=np.int32), np.array(idx, dtype=np.int32)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, mask: SubsetId) -> bool:
        return mask in self.index

    def position(self, mask: SubsetId) -> int:
        try:
            return self.index[mask]
        except KeyError:
            raise KeyError(f"set {elements_of(mask)} is not a family member") from None

    def subsets_of(self, position: int) -> np.ndarray:
        """Positions of members contained in the member at this position."""
        return self.sub_idx[self.sub_ptr[position] : self.sub_ptr[position + 1]]

    def reset_active(self) -> None:
        self.active[:] = True

    def deactivate_meeting(self, mask: SubsetId) -> None:
        """Mark every member intersecting mask inactive (mask itself included)."""
        self.active &= (self._masks & mask) == 0

    def masks_array(self) -> np.ndarray:
        return self._masks


# -- cost function ----------------------------------------------------------


@dataclass(frozen=True)
class CostFunction:
    """Intersection counts per member position; 0 for the empty set."""

    values: np.ndarray

    def of_position(self, position: int) -> int:
        return int(self.values[position])


def compute_costs(family: Family) -> CostFunction:
    """c(A) = number of active nonempty members meeting A, A itself included
    while it is active."""
    masks = family.masks_array()
    countable = family.active & (masks != 0)
    live = masks[countable]
    values = np.zeros(len(family), dtype=np.int64)
    for pos, mask in enumerate(family.members):
        if mask == 0:
            continue
        values[pos] = int(np.count_nonzero((live & mask) != 0))
    return CostFunction(values)


def update_costs_after_block(family: Family, astar: SubsetId) -> CostFunction:
    """Deactivate every member meeting astar, then recount costs over the
    remaining active members. Never increases any cost."""
    if astar != 0 and astar not in family:
        raise KeyError(f"block {elements_of(astar)} is not a family member")
    family.deactivate_meeting(astar)
    return compute_costs(family)


# -- set functions ----------------------------------------------------------


class SetFunction:
    """Weights over the feasible subsets with cached Mobius inversion.

    Full mode stores a dense table over 2^N (n <= 16); family mode stores
    values parallel to Family.members (weights nonnegative, w(empty) = 0).
    """

    def __init__(
        self,
        n: int,
        weights: np.ndarray,
        family: Family | None = None,
        tol: float | None = None,
    ):
        tol = resolve_tolerance(tol)
        self.n = n
        self.family = family
        if family is None:
            if not 1 <= n <= FULL_MODE_MAX_N:
                raise InstanceFormatError(f"full mode supports 1 <= n <= {FULL_MODE_MAX_N}")
            table = np.asarray(weights, dtype=np.float64)
            if table.shape != (1 << n,):
                raise InstanceFormatError("full mode needs a dense table of length 2^n")
            if abs(table[0]) > tol:
                raise InstanceFormatError("weight of the empty set must be 0")
            self.mode = "full"
            self._values = table.copy()
            self._values[0] = 0.0
        else:
            if family.n != n:
                raise InstanceFormatError("family ground-set size mismatch")
            vals = np.asarray(weights, dtype=np.float64)
            if vals.shape != (len(family),):
                raise InstanceFormatError("family mode needs one weight per member")
            if abs(vals[0]) > tol:
                raise InstanceFormatError("weight of the empty set must be 0")
            if np.any(vals < -tol):
                raise InstanceFormatError("family-mode weights must be nonnegative")
            self.mode = "family"
            self._values = vals.copy()
            self._values[0] = 0.0
        self._mobius: np.ndarray | None = None

    @classmethod
    def full(cls, n: int, table: Iterable[float], tol: float | None = None) -> "SetFunction":
        return cls(n, np.asarray(list(table), dtype=np.float64), None, tol)

    @classmethod
    def over_family(
        cls,
        family: Family,
        weights_by_mask: dict[SubsetId, float],
        tol: float | None = None,
    ) -> "SetFunction":
        vals = np.zeros(len(family))
        for mask, value in weights_by_mask.items():
            vals[family.position(mask)] = value
        return cls(family.n, vals, family, tol)

    def values(self) -> np.ndarray:
        """The raw weight array (dense table or member-parallel)."""
        return self._values

    def weight(self, mask: SubsetId) -> float:
        if self.mode == "full":
            return float(self._values[mask])
        return float(self._values[self.family.position(mask)])

    def set_weight(self, mask: SubsetId, value: float) -> None:
        """Mutate one weight; invalidates the Mobius cache."""
        if self.mode == "full":
            self._values[mask] = value
        else:
            self._values[self.family.position(mask)] = value
        self._mobius = None

    def mobius(self) -> np.ndarray:
        if self._mobius is None:
            self._mobius = mobius_inversion(self)
        return self._mobius

    def zeta_below(self, mask: SubsetId) -> float:
        """Sum of Mobius values over feasible subsets of mask (any mask, not
        just members). Equals weight(mask) whenever mask is feasible."""
        if self.mode == "full":
            return float(self._values[mask])
        mu = self.mobius()
        inside = (self.family.masks_array() & ~mask) == 0
        return float(np.sum(mu[inside]))


def mobius_inversion(w: SetFunction) -> np.ndarray:
    """Mobius values per feasible subset: the unique mu with
    w(A) = sum of mu(B) over feasible B inside A."""
    if w.mode == "full":
        return mobius_dense(w.values(), w.n)
    family = w.family
    vals = w.values().astype(np.longdouble)
    mu = np.zeros(len(family), dtype=np.longdouble)
    for pos in range(len(family)):
        subs = family.subsets_of(pos)
        proper = subs[subs != pos]
        mu[pos] = vals[pos] - mu[proper].sum()
    return mu.astype(np.float64)


def zeta_transform(
    mu: np.ndarray,
    n: int | None = None,
    family: Family | None = None,
    tol: float | None = None,
) -> SetFunction:
    """Inverse of mobius_inversion: rebuild the set function whose Mobius
    values are mu (dense table when family is None)."""
    if family is None:
        if n is None:
            raise ValueError("zeta_transform needs n in full mode")
        return SetFunction(n, zeta_dense(np.asarray(mu, dtype=np.float64), n), None, tol)
    mu_arr = np.asarray(mu, dtype=np.longdouble)
    if mu_arr.shape != (len(family),):
        raise InstanceFormatError("family mode needs one Mobius value per member")
    vals = np.zeros(len(family), dtype=np.longdouble)
    for pos in range(len(family)):
        vals[pos] = mu_arr[family.subsets_of(pos)].sum()
    return SetFunction(family.n, vals.astype(np.float64), family, tol)


# -- instance I/O -----------------------------------------------------------


def load_instance(payload: dict | str) -> SetFunction:
    """Parse an instance: {"n", "mode", "family" (1-based lists, family mode
    only), "weights"}. Full mode takes a dense table of length 2^n indexed by
    mask; family mode takes weights parallel to the family list."""
    if isinstance(payload, str):
        try:
            payload = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise InstanceFormatError("instance must be a JSON object")
    try:
        n = int(payload["n"])
        mode = payload["mode"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError("instance needs integer n and a mode") from exc
    if "weights" not in payload:
        raise InstanceFormatError("instance needs a weights array")
    weights = payload["weights"]
    if not isinstance(weights, list) or not all(isinstance(x, (int, float)) for x in weights):
        raise InstanceFormatError("weights must be a numeric array")
    if mode == "full":
        if "family" in payload:
            raise InstanceFormatError("full mode takes no family list")
        if n < 1 or n > FULL_MODE_MAX_N:
            raise InstanceFormatError(f"full mode supports 1 <= n <= {FULL_MODE_MAX_N}")
        if len(weights) != 1 << n:
            raise InstanceFormatError("full mode needs exactly 2^n weights")
        return SetFunction(n, np.asarray(weights, dtype=np.float64))
    if mode == "family":
        fam_lists = payload.get("family")
        if not isinstance(fam_lists, list):
            raise InstanceFormatError("family mode needs a family list")
        if len(fam_lists) != len(weights):
            raise InstanceFormatError("family and weights must be parallel")
        masks = []
        for entry in fam_lists:
            if not isinstance(entry, list):
                raise InstanceFormatError("family members must be element lists")
            masks.append(mask_from_elements(entry, n))
        family = Family.closed(n, masks)
        by_mask = dict(zip(masks, [float(x) for x in weights]))
        for mask, value in by_mask.items():
            if mask == 0 and abs(value) > default_tolerance():
                raise InstanceFormatError("weight of the empty set must be 0")
        return SetFunction.over_family(family, by_mask)
    raise InstanceFormatError(f"unknown mode {mode!r}")


def dump_instance(w: SetFunction) -> dict:
    """Serialize back to the instance payload shape."""
    if w.mode == "full":
        return {"n": w.n, "mode": "full", "weights": [float(x) for x in w.values()]}
    family = w.family
    keep = [p for p, mask in enumerate(family.members) if not family.synthetic[p]]
    return {
        "n": w.n,
        "mode": "family",
        "family": [elements_of(family.members[p]) for p in keep],
        "weights": [float(w.values()[p]) for p in keep],
    }
