"""Vertex profiles as strategy profiles: payoff sharing and equilibrium
checks for the game where each element picks one feasible set containing it
and the realized worth is shared out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cover import MembershipProfile, _worth_unchecked, chosen_groups, worth
from .setfn import SetFunction, elements_of, iter_submasks, popcount, resolve_tolerance


@dataclass(frozen=True)
class PayoffVector:
    """One payoff per element, in element order."""

    values: np.ndarray

    def total(self) -> float:
        return float(self.values.sum())

    def of(self, element: int) -> float:
        return float(self.values[element - 1])


def _require_vertex(profile: MembershipProfile, tol: float) -> None:
    if not profile.is_vertex(tol):
        raise ValueError("game operations need a vertex profile")


def shapley_payoffs(
    w: SetFunction, profile: MembershipProfile, tol: float | None = None
) -> PayoffVector:
    """Share each induced block's weight by spreading every inner subset's
    Mobius value equally over that subset's members. Block totals equal block
    weights, so the vector is efficient."""
    tol = resolve_tolerance(tol)
    if w.mode != "full":
        raise ValueError("payoff sharing is defined on full-domain instances")
    _require_vertex(profile, tol)
    mu = w.mobius()
    out = np.zeros(w.n)
    for group in chosen_groups(profile, tol).values():
        for sub in iter_submasks(group):
            if sub == 0:
                continue
            share = mu[sub] / popcount(sub)
            for i in elements_of(sub):
                out[i - 1] += share
    return PayoffVector(out)


def proportional_payoffs(
    w: SetFunction,
    profile: MembershipProfile,
    omega: np.ndarray | list[float],
    tol: float | None = None,
) -> PayoffVector:
    """Fixed positive shares of the global worth."""
    tol = resolve_tolerance(tol)
    _require_vertex(profile, tol)
    weights = np.asarray(omega, dtype=np.float64)
    if weights.shape != (w.n,) or np.any(weights <= 0):
        raise ValueError("share weights must be positive, one per element")
    return PayoffVector(weights * (worth(profile, w) / weights.sum()))


def is_equilibrium(
    w: SetFunction,
    profile: MembershipProfile,
    omega: np.ndarray | list[float] | None = None,
    tol: float | None = None,
) -> bool:
    """No element can strictly raise the worth by re-concentrating its row,
    checked by re-evaluating the worth at every pure deviation. Positive
    shares scale every element's payoff comparison identically, so the answer
    never depends on them."""
    tol = resolve_tolerance(tol)
    _require_vertex(profile, tol)
    if omega is not None:
        weights = np.asarray(omega, dtype=np.float64)
        if weights.shape != (w.n,) or np.any(weights <= 0):
            raise ValueError("share weights must be positive, one per element")
    base = worth(profile, w)
    if profile.mode == "full":
        masks = np.arange(1 << profile.n, dtype=np.int64)
    else:
        masks = profile.family.masks_array()
    for row in range(profile.n):
        saved = profile.matrix[row].copy()
        for col in np.nonzero((masks >> row) & 1)[0]:
            if saved[col] == 1.0:
                continue
            trial = profile.matrix
            trial[row, :] = 0.0
            trial[row, col] = 1.0
            improved = _worth_unchecked(trial, w) > base + tol
            trial[row, :] = saved
            if improved:
                return False
    return True
