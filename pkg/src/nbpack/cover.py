"""Fuzzy covers: per-element membership distributions over feasible sets,
polynomial worth of a cover, conditional weights, and partial derivatives.

Row i-1 of the membership matrix is element i's distribution. Full mode uses
one column per mask (width 2^n); family mode one column per family member.
An element may only hold mass on feasible sets that contain it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._backend import grad_dense, grad_family, worth_dense, worth_family
from .setfn import (
    Family,
    InstanceFormatError,
    SetFunction,
    SubsetId,
    elements_of,
    mask_from_elements,
    popcount,
    resolve_tolerance,
)

RENORMALIZE_SLACK = 1e-6


class MembershipProfile:
    """A fuzzy cover: each element spreads one unit of mass over the feasible
    sets containing it."""

    def __init__(
        self,
        n: int,
        matrix: np.ndarray,
        family: Family | None = None,
        validate: bool = True,
        tol: float | None = None,
    ):
        self.n = n
        self.family = family
        self.mode = "full" if family is None else "family"
        width = (1 << n) if family is None else len(family)
        q = np.asarray(matrix, dtype=np.float64)
        if q.shape != (n, width):
            raise InstanceFormatError(f"membership matrix must be {n} x {width}")
        self.matrix = q.copy()
        if validate:
            self._validate(resolve_tolerance(tol))

    def _validate(self, tol: float) -> None:
        if np.any(self.matrix < -tol):
            raise InstanceFormatError("membership masses must be nonnegative")
        off = self._off_support_mask()
        if np.any(np.abs(self.matrix[off]) > tol):
            raise InstanceFormatError("mass on a set not containing the element")
        sums = self.matrix.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > tol)[0]
        if bad.size:
            raise InstanceFormatError(f"row of element {bad[0] + 1} does not sum to 1")

    def _off_support_mask(self) -> np.ndarray:
        # boolean matrix marking (row, column) pairs the element may not use
        if self.mode == "full":
            masks = np.arange(1 << self.n, dtype=np.int64)
        else:
            masks = self.family.masks_array()
        contains = ((masks[None, :] >> np.arange(self.n)[:, None]) & 1).astype(bool)
        return ~contains

    # -- constructors --

    @classmethod
    def uniform(cls, w: SetFunction) -> "MembershipProfile":
        """Equal mass on every feasible set containing the element."""
        prof = cls._blank(w)
        support = ~prof._off_support_mask()
        counts = support.sum(axis=1)
        prof.matrix[support] = np.repeat(1.0 / counts, counts)
        return prof

    @classmethod
    def from_vertices(cls, w: SetFunction, chosen: dict[int, SubsetId]) -> "MembershipProfile":
        """Vertex profile: element i holds all mass on chosen[i]."""
        prof = cls._blank(w)
        if sorted(chosen) != list(range(1, w.n + 1)):
            raise InstanceFormatError("need one chosen set per element")
        for element, mask in chosen.items():
            if not (mask >> (element - 1)) & 1:
                raise InstanceFormatError(f"chosen set for {element} must contain it")
            col = mask if prof.mode == "full" else prof.family.position(mask)
            prof.matrix[element - 1, col] = 1.0
        return prof

    @classmethod
    def _blank(cls, w: SetFunction) -> "MembershipProfile":
        width = (1 << w.n) if w.mode == "full" else len(w.family)
        return cls(w.n, np.zeros((w.n, width)), w.family, validate=False)

    def copy(self) -> "MembershipProfile":
        return MembershipProfile(self.n, self.matrix, self.family, validate=False)

    # -- structure queries --

    def column_of(self, mask: SubsetId) -> int:
        return mask if self.mode == "full" else self.family.position(mask)

    def mask_of_column(self, column: int) -> SubsetId:
        return column if self.mode == "full" else self.family.members[column]

    def mass(self, element: int, mask: SubsetId) -> float:
        return float(self.matrix[element - 1, self.column_of(mask)])

    def column_mass(self) -> np.ndarray:
        """Total mass each set holds across its elements."""
        return self.matrix.sum(axis=0)

    def is_vertex(self, tol: float | None = None) -> bool:
        """True when every row is an extreme point of its simplex."""
        tol = resolve_tolerance(tol)
        return bool(np.all(np.abs(self.matrix.max(axis=1) - 1.0) <= tol))

    def chosen_sets(self, tol: float | None = None) -> dict[int, SubsetId]:
        """For an exact profile, the set each element selected."""
        tol = resolve_tolerance(tol)
        out: dict[int, SubsetId] = {}
        for row in range(self.n):
            col = int(np.argmax(self.matrix[row]))
            if abs(self.matrix[row, col] - 1.0) > tol:
                raise ValueError(f"row of element {row + 1} is not a vertex")
            out[row + 1] = self.mask_of_column(col)
        return out

    # -- serialization --

    @classmethod
    def from_json(cls, payload: dict | str, w: SetFunction) -> "MembershipProfile":
        """Parse {"rows": [{"element", "memberships": [{"set", "mass"}]}]}.
        Row sums within 1e-6 of 1 are renormalized; anything further off is
        rejected."""
        if isinstance(payload, str):
            try:
                payload = json.loads(payload)
            except json.JSONDecodeError as exc:
                raise InstanceFormatError(f"invalid JSON: {exc}") from exc
        if not isinstance(payload, dict) or not isinstance(payload.get("rows"), list):
            raise InstanceFormatError("profile must be an object with a rows list")
        rows = payload["rows"]
        if len(rows) != w.n:
            raise InstanceFormatError(f"profile needs exactly {w.n} rows")
        prof = cls._blank(w)
        seen: set[int] = set()
        for entry in rows:
            if not isinstance(entry, dict):
                raise InstanceFormatError("each row must be an object")
            try:
                element = int(entry["element"])
                memberships = entry["memberships"]
            except (KeyError, TypeError, ValueError) as exc:
                raise InstanceFormatError("row needs element and memberships") from exc
            if not 1 <= element <= w.n or element in seen:
                raise InstanceFormatError(f"bad or repeated element {element}")
            seen.add(element)
            if not isinstance(memberships, list) or not memberships:
                raise InstanceFormatError(f"element {element} needs memberships")
            cols_seen: set[int] = set()
            for m in memberships:
                try:
                    mask = mask_from_elements(m["set"], w.n)
                    massval = float(m["mass"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise InstanceFormatError("membership needs set and mass") from exc
                if not (mask >> (element - 1)) & 1:
                    raise InstanceFormatError(
                        f"set {m['set']} does not contain element {element}"
                    )
                if massval < 0:
                    raise InstanceFormatError("membership mass must be nonnegative")
                if prof.mode == "family" and mask not in prof.family:
                    raise InstanceFormatError(f"set {m['set']} is not a family member")
                col = prof.column_of(mask)
                if col in cols_seen:
                    raise InstanceFormatError(f"duplicate set for element {element}")
                cols_seen.add(col)
                prof.matrix[element - 1, col] = massval
            total = prof.matrix[element - 1].sum()
            if abs(total - 1.0) > RENORMALIZE_SLACK:
                raise InstanceFormatError(
                    f"row of element {element} sums to {total:.9g}, not 1"
                )
            prof.matrix[element - 1] /= total
        return prof

    def to_json(self) -> dict:
        rows = []
        for row in range(self.n):
            cols = np.nonzero(self.matrix[row])[0]
            rows.append(
                {
                    "element": row + 1,
                    "memberships": [
                        {
                            "set": elements_of(self.mask_of_column(int(c))),
                            "mass": float(self.matrix[row, c]),
                        }
                        for c in cols
                    ],
                }
            )
        return {"rows": rows}


@dataclass(frozen=True)
class PartitionProfile:
    """A partition of the ground set by disjoint covering blocks, stored
    sorted by mask."""

    n: int
    blocks: tuple[SubsetId, ...]

    def __post_init__(self):
        union = 0
        for b in self.blocks:
            if b == 0:
                raise ValueError("partition blocks must be nonempty")
            if union & b:
                raise ValueError("partition blocks must be disjoint")
            union |= b
        if union != (1 << self.n) - 1:
            raise ValueError("partition blocks must cover the ground set")
        object.__setattr__(self, "blocks", tuple(sorted(self.blocks)))

    def to_membership(self, w: SetFunction) -> MembershipProfile:
        """Vertex profile where every element selects its own block. Family
        mode requires each block to be feasible."""
        chosen: dict[int, SubsetId] = {}
        for b in self.blocks:
            for e in elements_of(b):
                chosen[e] = b
        return MembershipProfile.from_vertices(w, chosen)

    def weight_total(self, w: SetFunction) -> float:
        return float(sum(w.weight(b) for b in self.blocks))


# -- gradient rows -----------------------------------------------------------


@dataclass(frozen=True)
class GradientRow:
    """One element's conditional weights over the feasible sets containing
    it, in ascending mask order."""

    element: int
    masks: np.ndarray
    values: np.ndarray

    def value(self, mask: SubsetId) -> float:
        pos = int(np.searchsorted(self.masks, mask))
        if pos >= len(self.masks) or self.masks[pos] != mask:
            raise KeyError(f"set {elements_of(mask)} is not available to {self.element}")
        return float(self.values[pos])

    def best(self, direction: str = "max", rng: np.random.Generator | None = None,
             tol: float | None = None) -> SubsetId:
        """Mask with extreme value; ties go to the lowest mask, or uniformly
        at random when an RNG is supplied."""
        tol = resolve_tolerance(tol)
        vals = self.values if direction == "max" else -self.values
        tied = np.nonzero(vals >= vals.max() - tol)[0]
        pick = tied[0] if rng is None else int(rng.choice(tied))
        return int(self.masks[pick])


# -- worth and derivatives ---------------------------------------------------


def _check_compatible(profile: MembershipProfile, w: SetFunction) -> None:
    if profile.n != w.n or profile.mode != w.mode:
        raise InstanceFormatError("profile and set function disagree on geometry")
    if profile.mode == "family" and profile.family is not w.family:
        if profile.family.members != w.family.members:
            raise InstanceFormatError("profile and set function use different families")


def _worth_unchecked(matrix: np.ndarray, w: SetFunction) -> float:
    # internal evaluator: tolerates rows that are not simplex points, which
    # the derivative definition needs (the zeroed row is a formal device)
    mu = w.mobius()
    if w.mode == "full":
        return float(worth_dense(matrix, mu))
    f = w.family
    return float(worth_family(matrix, mu, f.sub_ptr, f.sub_idx, f.elem_ptr, f.elem_idx))


def worth(profile: MembershipProfile, w: SetFunction, validate: bool = True) -> float:
    """Global worth: for each feasible set, the expected weight of the random
    subset drawn from its members' masses, summed over the family."""
    _check_compatible(profile, w)
    if validate:
        profile._validate(resolve_tolerance(None))
    return _worth_unchecked(profile.matrix, w)


def gradient(profile: MembershipProfile, w: SetFunction) -> np.ndarray:
    """Matrix of partial derivatives of worth, shaped like the profile. Entry
    (i-1, A) is the conditional weight of A given the other rows; columns not
    containing the element are zero."""
    _check_compatible(profile, w)
    mu = w.mobius()
    if profile.mode == "full":
        return grad_dense(profile.matrix, mu)
    f = profile.family
    return grad_family(profile.matrix, mu, f.sub_ptr, f.sub_idx, f.elem_ptr, f.elem_idx)


def conditional_weight(
    profile: MembershipProfile, w: SetFunction, element: int
) -> GradientRow:
    """Weights as one element sees them under everyone else's mixed
    memberships: for each feasible set containing the element, the Mobius sum
    over its feasible subsets through the element, scaled by the other
    members' masses on that set. The element's own row is ignored."""
    if not 1 <= element <= profile.n:
        raise ValueError(f"element {element} outside 1..{profile.n}")
    row = gradient(profile, w)[element - 1]
    if profile.mode == "full":
        masks = np.nonzero(np.arange(1 << profile.n) & (1 << (element - 1)))[0]
    else:
        masks = profile.family.masks_array()[profile.family.per_element[element - 1]]
        order = np.argsort(masks)
        masks = masks[order]
    cols = np.array([profile.column_of(int(m)) for m in masks])
    return GradientRow(element, masks.astype(np.int64), row[cols].copy())


def derivative(
    profile: MembershipProfile, w: SetFunction, element: int, mask: SubsetId
) -> float:
    """Partial derivative of worth in the (element, mask) coordinate, computed
    by two full worth evaluations. Worth is multilinear, so this equals the
    worth with the row pinned to mask minus the worth with the row removed."""
    _check_compatible(profile, w)
    if not (mask >> (element - 1)) & 1:
        raise ValueError(f"set {elements_of(mask)} does not contain element {element}")
    pinned = profile.matrix.copy()
    pinned[element - 1] = 0.0
    pinned[element - 1, profile.column_of(mask)] = 1.0
    removed = profile.matrix.copy()
    removed[element - 1] = 0.0
    return _worth_unchecked(pinned, w) - _worth_unchecked(removed, w)


def worth_decomposition(
    profile: MembershipProfile, w: SetFunction, element: int
) -> tuple[float, float]:
    """Split worth into the element's own share (its row dotted with its
    conditional weights) and the remainder, which does not depend on the row."""
    _check_compatible(profile, w)
    row = gradient(profile, w)[element - 1]
    own = float(np.dot(profile.matrix[element - 1], row))
    removed = profile.matrix.copy()
    removed[element - 1] = 0.0
    rest = _worth_unchecked(removed, w)
    return own, rest


def is_exact_support(profile: MembershipProfile, tol: float | None = None) -> bool:
    """Support condition for exactness: every feasible set is backed by
    either none or all of its elements."""
    tol = resolve_tolerance(tol)
    holders = (profile.matrix > tol).sum(axis=0)
    if profile.mode == "full":
        sizes = np.array([popcount(a) for a in range(1 << profile.n)])
    else:
        sizes = np.array([popcount(m) for m in profile.family.members])
    return bool(np.all((holders == 0) | (holders == sizes)))


def chosen_groups(
    profile: MembershipProfile, tol: float | None = None
) -> dict[SubsetId, SubsetId]:
    """For a vertex profile, map each chosen set to the mask of elements that
    chose it. Values partition the ground set; a value can be a proper subset
    of its key."""
    chosen = profile.chosen_sets(tol)
    groups: dict[SubsetId, SubsetId] = {}
    for element, mask in chosen.items():
        groups[mask] = groups.get(mask, 0) | (1 << (element - 1))
    return groups


def induced_partition(
    profile: MembershipProfile, tol: float | None = None
) -> PartitionProfile:
    """Partition induced by a vertex profile: elements concentrating on a
    common set form one block."""
    return PartitionProfile(profile.n, tuple(chosen_groups(profile, tol).values()))
