"""Search procedures over fuzzy covers: vertex rounding, full-dimensional
local search, and family-mode local search with intersection costs.

All three terminate at vertex profiles whose induced partitions yield the
returned packing. Trace events follow the schema
{"t", "loop", "selected", "W", "event"} with events select, extract, and
fallback_singleton; W is always the true objective, never cost-adjusted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import grad_family
from .cover import (
    MembershipProfile,
    PartitionProfile,
    chosen_groups,
    gradient,
    induced_partition,
    is_exact_support,
    worth,
)
from .setfn import (
    CostFunction,
    Family,
    InstanceFormatError,
    SetFunction,
    SubsetId,
    compute_costs,
    elements_of,
    mobius_inversion,
    popcount,
    resolve_tolerance,
    update_costs_after_block,
)


class ConfigError(ValueError):
    """Raised when a solver configuration cannot apply to the instance."""


@dataclass
class SolverConfig:
    algorithm: str = "local"  # roundup | local | local_cost
    init: str = "uniform"  # uniform | weight_proportional
    tolerance: float | None = None
    seed: int = 0
    randomize_ties: bool = False
    max_iterations: int | None = None
    selection: str = "min"  # min | sum, line (a) statistic in local_cost
    direction: str = "max"  # max | min, roundup only

    def resolved(self, n: int) -> "SolverConfig":
        tol = resolve_tolerance(self.tolerance)
        if tol <= 0:
            raise ConfigError("tolerance must be positive")
        cap = self.max_iterations if self.max_iterations is not None else 4 * n + 16
        if cap < n:
            raise ConfigError(f"max_iterations must be at least n = {n}")
        if self.algorithm not in ("roundup", "local", "local_cost"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.init not in ("uniform", "weight_proportional"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.selection not in ("min", "sum"):
            raise ConfigError(f"unknown selection {self.selection!r}")
        if self.direction not in ("max", "min"):
            raise ConfigError(f"unknown direction {self.direction!r}")
        return SolverConfig(
            self.algorithm, self.init, tol, self.seed, self.randomize_ties,
            cap, self.selection, self.direction,
        )

    def rng(self) -> np.random.Generator | None:
        return np.random.default_rng(self.seed) if self.randomize_ties else None


@dataclass
class SolveResult:
    final_profile: PartitionProfile
    packing: list[SubsetId]
    total_weight: float
    worth_trace: list[float]
    iterations: int
    local_maximizer: bool
    events: list[dict] = field(default_factory=list)


def extract_packing(
    w: SetFunction, partition: PartitionProfile, tol: float | None = None
) -> list[SubsetId]:
    """Blocks worth keeping: feasible blocks, minus singletons of negligible
    weight. Multi-element blocks stay even at weight zero."""
    tol = resolve_tolerance(tol)
    kept = []
    for b in partition.blocks:
        if w.mode == "family" and b not in w.family:
            continue
        if popcount(b) == 1 and w.weight(b) <= tol:
            continue
        kept.append(b)
    return kept


def _event(events: list[dict], t: int, loop: int, selected: SubsetId | None,
           W: float, kind: str) -> None:
    events.append(
        {
            "t": t,
            "loop": loop,
            "selected": None if selected is None else elements_of(selected),
            "W": W,
            "event": kind,
        }
    )


# -- initialization -----------------------------------------------------------


def make_initial_profile(
    w: SetFunction,
    family: Family | None,
    kind: str,
    costs: CostFunction | None = None,
    events: list[dict] | None = None,
    tol: float | None = None,
) -> MembershipProfile:
    """Starting cover: uniform gives each element equal mass on every feasible
    set containing it; weight_proportional splits mass in proportion to the
    weights (cost-adjusted when costs are supplied). An element whose sets all
    weigh zero falls back to its uniform row, recorded as a t=0 event."""
    tol = resolve_tolerance(tol)
    if family is not None and family is not w.family:
        raise InstanceFormatError("family does not match the set function")
    if kind == "uniform":
        return MembershipProfile.uniform(w)
    if kind != "weight_proportional":
        raise ConfigError(f"unknown init {kind!r}")
    values = w.values().copy()
    if w.mode == "full" and np.any(values < 0):
        raise InstanceFormatError("weight-proportional init needs nonnegative weights")
    if costs is not None:
        if w.mode != "family":
            raise ConfigError("cost-adjusted init applies to family mode only")
        values = cost_adjusted_values(w, costs)
    prof = MembershipProfile.uniform(w)
    fallback_rows = []
    for row in range(w.n):
        if w.mode == "full":
            cols = np.nonzero(np.arange(1 << w.n) & (1 << row))[0]
        else:
            cols = w.family.per_element[row]
        denom = float(values[cols].sum())
        if denom <= tol:
            fallback_rows.append(row)  # keep the uniform row
            continue
        prof.matrix[row, :] = 0.0
        prof.matrix[row, cols] = values[cols] / denom
    if events is not None:
        for row in fallback_rows:
            _event(events, 0, 1, 1 << row, worth(prof, w), "fallback_singleton")
    return prof


def cost_adjusted_values(w: SetFunction, costs: CostFunction) -> np.ndarray:
    """Weight over cost per member; zero wherever the member is inactive or
    costless (the empty set)."""
    if w.mode != "family":
        raise ConfigError("costs apply to family mode only")
    values = np.zeros(len(w.family))
    live = (costs.values > 0) & w.family.active
    values[live] = w.values()[live] / costs.values[live]
    return values


# -- shared helpers -----------------------------------------------------------


def _tie_pick(masks: list[SubsetId], scores: list[float], tol: float,
              rng: np.random.Generator | None) -> SubsetId:
    # argmax with ties to the lowest mask, or random when an RNG is supplied
    best = max(scores)
    tied = sorted(m for m, s in zip(masks, scores) if s >= best - tol)
    if rng is None:
        return tied[0]
    return int(tied[int(rng.integers(len(tied)))])


def _column_sizes(profile: MembershipProfile) -> np.ndarray:
    if profile.mode == "full":
        return np.array([popcount(a) for a in range(1 << profile.n)])
    return np.array([popcount(m) for m in profile.family.members])


def _finalize(
    w: SetFunction,
    profile: MembershipProfile,
    worth_trace: list[float],
    events: list[dict],
    iterations: int,
    tol: float,
) -> SolveResult:
    # deviations are judged on the actual final rows: chosen sets can exceed
    # their element groups after plain rounding, so the canonical partition
    # profile is not always the profile the search ended at
    partition = induced_partition(profile, tol)
    packing = extract_packing(w, partition, tol)
    total = float(sum(w.weight(b) for b in packing))
    return SolveResult(
        final_profile=partition,
        packing=packing,
        total_weight=total,
        worth_trace=worth_trace,
        iterations=iterations,
        local_maximizer=not has_improving_deviation(w, profile, tol),
        events=events,
    )


# -- RoundUp ------------------------------------------------------------------


def round_up(
    w: SetFunction, q0: MembershipProfile, config: SolverConfig | None = None
) -> SolveResult:
    """Round each non-vertex row in turn onto a best (or worst) pure set under
    its conditional weights. Worth never decreases in the maximizing
    direction; at most one concentration per element."""
    config = (config or SolverConfig(algorithm="roundup")).resolved(w.n)
    tol, rng = config.tolerance, config.rng()
    prof = q0.copy()
    events: list[dict] = []
    worth_trace = [worth(prof, w)]
    sign = 1.0 if config.direction == "max" else -1.0
    t = 0
    for row in range(w.n):
        if prof.matrix[row].max() >= 1.0 - tol:
            continue
        if t >= config.max_iterations:
            raise RuntimeError("iteration safeguard tripped in round_up")
        g = gradient(prof, w)[row]
        if prof.mode == "full":
            cols = np.nonzero(np.arange(1 << w.n) & (1 << row))[0]
        else:
            cols = w.family.per_element[row]
        masks = [int(prof.mask_of_column(int(c))) for c in cols]
        scores = [sign * float(g[c]) for c in cols]
        astar = _tie_pick(masks, scores, tol, rng)
        prof.matrix[row, :] = 0.0
        prof.matrix[row, prof.column_of(astar)] = 1.0
        t += 1
        W = worth(prof, w)
        worth_trace.append(W)
        _event(events, t, 1, astar, W, "select")
    return _finalize(w, prof, worth_trace, events, t, tol)


# -- LocalSearch (full-dimensional) -------------------------------------------


def _require_support_condition(profile: MembershipProfile, tol: float) -> None:
    if not is_exact_support(profile, tol):
        raise InstanceFormatError(
            "initial profile must back every set with none or all of its elements"
        )


def _redistribute(
    profile: MembershipProfile,
    values: np.ndarray,
    astar_col: int,
    selected_union: SubsetId,
    masks: np.ndarray,
    t: int,
    events: list[dict],
    w: SetFunction,
    tol: float,
) -> None:
    """Concentrate the selected set's elements on it, then move every outside
    element's conflicting mass onto sets disjoint from all selected blocks, in
    proportion to the given values. A zero denominator sends the freed mass to
    the element's own singleton."""
    astar = int(masks[astar_col])
    meets_astar = (masks & astar) != 0
    free = (masks & (selected_union | astar)) == 0
    fallback_rows = []
    for row in range(profile.n):
        if (astar >> row) & 1:
            profile.matrix[row, :] = 0.0
            profile.matrix[row, astar_col] = 1.0
            continue
        if (selected_union >> row) & 1:
            continue
        freed = float(profile.matrix[row, meets_astar].sum())
        if freed <= 0.0:
            continue
        profile.matrix[row, meets_astar] = 0.0
        contains = ((masks >> row) & 1).astype(bool)
        targets = np.nonzero(contains & free)[0]
        denom = float(values[targets].sum())
        if denom > tol:
            profile.matrix[row, targets] += values[targets] * (freed / denom)
        else:
            own = profile.column_of(1 << row)
            profile.matrix[row, own] += freed
            fallback_rows.append(row)
    for row in fallback_rows:
        _event(events, t, 1, 1 << row, worth(profile, w, validate=False),
               "fallback_singleton")


def local_search(
    w: SetFunction, q0: MembershipProfile, config: SolverConfig | None = None
) -> SolveResult:
    """Full-dimensional search. Loop 1 repeatedly selects a partially backed
    set maximizing the sum of its members' conditional weights, pins its
    members to it, and redistributes outside mass onto still-free sets in
    proportion to their weights. Loop 2 extracts an element to a singleton
    while its block underperforms the split, leaving the remainder a block."""
    config = (config or SolverConfig(algorithm="local")).resolved(w.n)
    if w.mode != "full":
        raise ConfigError("this search needs a full-domain instance")
    tol, rng = config.tolerance, config.rng()
    # redistribution shares mass in proportion to weights
    if np.any(w.values() < -tol):
        raise ConfigError("this search needs nonnegative weights")
    prof = q0.copy()
    prof._validate(tol)
    _require_support_condition(prof, tol)
    events: list[dict] = []
    worth_trace = [worth(prof, w)]
    masks = np.arange(1 << w.n, dtype=np.int64)
    sizes = _column_sizes(prof)
    selected_union: SubsetId = 0
    t = 0

    while True:  # Loop 1
        col_mass = prof.matrix.sum(axis=0)
        partial = np.nonzero((col_mass > tol) & (col_mass < sizes - tol))[0]
        if partial.size == 0:
            break
        if t >= config.max_iterations:
            raise RuntimeError("iteration safeguard tripped in Loop 1")
        t += 1
        scores = gradient(prof, w).sum(axis=0)
        astar = _tie_pick([int(a) for a in partial],
                          [float(scores[a]) for a in partial], tol, rng)
        _redistribute(prof, w.values(), astar, selected_union, masks, t, events,
                      w, tol)
        selected_union |= astar
        W = worth(prof, w)
        worth_trace.append(W)
        _event(events, t, 1, astar, W, "select")

    t = _loop2_full(w, prof, worth_trace, events, t, config)
    return _finalize(w, prof, worth_trace, events, t, tol)


def _loop2_full(
    w: SetFunction,
    prof: MembershipProfile,
    worth_trace: list[float],
    events: list[dict],
    t: int,
    config: SolverConfig,
) -> int:
    """Extract elements whose block loses against splitting off their
    singleton, most improving first."""
    tol = config.tolerance
    while True:
        groups = chosen_groups(prof, tol)
        best: tuple[float, SubsetId, int] | None = None
        for block in sorted(groups.values()):
            if popcount(block) <= 1:
                continue
            for i in elements_of(block):
                gain = w.weight(1 << (i - 1)) + w.weight(block & ~(1 << (i - 1))) \
                    - w.weight(block)
                if gain > tol and (best is None or gain > best[0] + tol):
                    best = (gain, block, i)
        if best is None:
            return t
        if t >= config.max_iterations:
            raise RuntimeError("iteration safeguard tripped in Loop 2")
        _, block, i = best
        t += 1
        rest = block & ~(1 << (i - 1))
        prof.matrix[i - 1, :] = 0.0
        prof.matrix[i - 1, prof.column_of(1 << (i - 1))] = 1.0
        rest_col = prof.column_of(rest)
        for j in elements_of(rest):
            prof.matrix[j - 1, :] = 0.0
            prof.matrix[j - 1, rest_col] = 1.0
        W = worth(prof, w)
        worth_trace.append(W)
        _event(events, t, 2, 1 << (i - 1), W, "extract")


# -- LS-WithCost (family mode) -------------------------------------------------


def ls_with_cost(
    w: SetFunction,
    costs: CostFunction,
    q0: MembershipProfile,
    config: SolverConfig | None = None,
) -> SolveResult:
    """Family-mode search on cost-adjusted weights. The selection statistic is
    the minimum (or sum) of the members' cost-adjusted conditional weights;
    after each selection the costs are recounted over the sets that survive
    disjointness and the adjusted Mobius coefficients are rebuilt. The closing
    extraction loop judges blocks by plain weight."""
    config = (config or SolverConfig(algorithm="local_cost")).resolved(w.n)
    if w.mode != "family":
        raise ConfigError("cost-based search needs a family-mode instance")
    tol, rng = config.tolerance, config.rng()
    fam = w.family
    prof = q0.copy()
    prof._validate(tol)
    events: list[dict] = []
    worth_trace = [worth(prof, w)]
    masks = fam.masks_array()
    sizes = _column_sizes(prof)
    selected_union: SubsetId = 0
    t = 0

    while True:  # Loop 1, guarded over positive adjusted weights only
        hat = cost_adjusted_values(w, costs)
        col_mass = prof.matrix.sum(axis=0)
        partial = np.nonzero((hat > tol) & (col_mass > tol)
                             & (col_mass < sizes - tol))[0]
        if partial.size == 0:
            break
        if t >= config.max_iterations:
            raise RuntimeError("iteration safeguard tripped in Loop 1")
        t += 1
        hat_mu = mobius_inversion(SetFunction(w.n, hat, fam, tol))
        ghat = grad_family(prof.matrix, hat_mu, fam.sub_ptr, fam.sub_idx,
                           fam.elem_ptr, fam.elem_idx)
        cand_scores = []
        for pos in partial:
            rows = fam.elem_idx[fam.elem_ptr[pos] : fam.elem_ptr[pos + 1]]
            vals = ghat[rows, pos]
            cand_scores.append(float(vals.min() if config.selection == "min"
                                     else vals.sum()))
        astar = _tie_pick([int(masks[p]) for p in partial], cand_scores, tol, rng)
        astar_col = fam.position(astar)
        _redistribute(prof, hat, astar_col, selected_union, masks, t, events,
                      w, tol)
        selected_union |= astar
        costs = update_costs_after_block(fam, astar)  # line (e)
        W = worth(prof, w)
        worth_trace.append(W)
        _event(events, t, 1, astar, W, "select")

    t = _collapse_residual_rows(w, prof, selected_union, worth_trace, events, t,
                                config)
    t = _loop2_family(w, prof, worth_trace, events, t, config)
    return _finalize(w, prof, worth_trace, events, t, tol)


def _collapse_residual_rows(
    w: SetFunction,
    prof: MembershipProfile,
    selected_union: SubsetId,
    worth_trace: list[float],
    events: list[dict],
    t: int,
    config: SolverConfig,
) -> int:
    """Rows that survived Loop 1 away from a fully backed vertex can only be
    sitting on zero-adjusted-weight sets; send each to its singleton so the
    output is a partition."""
    tol = config.tolerance
    col_mass = prof.matrix.sum(axis=0)
    sizes = _column_sizes(prof)
    for row in range(prof.n):
        if (selected_union >> row) & 1:
            continue
        top = int(np.argmax(prof.matrix[row]))
        settled = (
            prof.matrix[row, top] >= 1.0 - tol
            and col_mass[top] >= sizes[top] - tol
        )
        if settled:
            continue
        if t >= config.max_iterations:
            raise RuntimeError("iteration safeguard tripped while collapsing")
        t += 1
        prof.matrix[row, :] = 0.0
        prof.matrix[row, prof.column_of(1 << row)] = 1.0
        W = worth(prof, w)
        worth_trace.append(W)
        _event(events, t, 1, 1 << row, W, "fallback_singleton")
    return t


def _loop2_family(
    w: SetFunction,
    prof: MembershipProfile,
    worth_trace: list[float],
    events: list[dict],
    t: int,
    config: SolverConfig,
) -> int:
    """Family-mode extraction: the block's remainder is valued through the
    Mobius mass of its feasible subsets. An infeasible remainder dissolves
    into singletons."""
    tol = config.tolerance
    fam = w.family
    while True:
        groups = chosen_groups(prof, tol)
        best: tuple[float, SubsetId, int] | None = None
        for block in sorted(groups.values()):
            if popcount(block) <= 1 or block not in fam:
                continue
            for i in elements_of(block):
                rest = block & ~(1 << (i - 1))
                gain = w.weight(1 << (i - 1)) + w.zeta_below(rest) - w.weight(block)
                if gain > tol and (best is None or gain > best[0] + tol):
                    best = (gain, block, i)
        if best is None:
            return t
        if t >= config.max_iterations:
            raise RuntimeError("iteration safeguard tripped in Loop 2")
        _, block, i = best
        t += 1
        rest = block & ~(1 << (i - 1))
        prof.matrix[i - 1, :] = 0.0
        prof.matrix[i - 1, prof.column_of(1 << (i - 1))] = 1.0
        feasible_rest = rest in fam
        if feasible_rest:
            rest_col = prof.column_of(rest)
            for j in elements_of(rest):
                prof.matrix[j - 1, :] = 0.0
                prof.matrix[j - 1, rest_col] = 1.0
        else:
            for j in elements_of(rest):
                prof.matrix[j - 1, :] = 0.0
                prof.matrix[j - 1, prof.column_of(1 << (j - 1))] = 1.0
        W = worth(prof, w)
        worth_trace.append(W)
        _event(events, t, 2, 1 << (i - 1), W, "extract")
        if not feasible_rest:
            _event(events, t, 2, rest, W, "fallback_singleton")


# -- local maximality ----------------------------------------------------------


def is_local_maximizer(
    w: SetFunction, p: PartitionProfile, tol: float | None = None
) -> bool:
    """True when no single element can raise the worth by rebuilding its own
    row. Extreme rows suffice: worth is linear in each row, so an interior
    deviation can never beat the best vertex."""
    tol = resolve_tolerance(tol)
    if w.mode == "family":
        for b in p.blocks:
            if b not in w.family:
                raise ValueError(f"block {elements_of(b)} is not feasible")
    prof = p.to_membership(w)
    return not has_improving_deviation(w, prof, tol)


def has_improving_deviation(
    w: SetFunction, prof: MembershipProfile, tol: float | None = None
) -> bool:
    """Whether some element can strictly improve the worth by concentrating
    its row elsewhere, judged through the conditional-weight rows."""
    tol = resolve_tolerance(tol)
    g = gradient(prof, w)
    current = (g * prof.matrix).sum(axis=1)
    if prof.mode == "full":
        masks = np.arange(1 << prof.n, dtype=np.int64)
    else:
        masks = prof.family.masks_array()
    for row in range(prof.n):
        contains = ((masks >> row) & 1).astype(bool)
        if g[row, contains].max() > current[row] + tol:
            return True
    return False


# -- orchestration --------------------------------------------------------------


def solve(
    w: SetFunction,
    config: SolverConfig | None = None,
    q0: MembershipProfile | None = None,
) -> SolveResult:
    """Run the configured algorithm end to end: build the initial profile
    (unless one is supplied), reset cost bookkeeping, search, and package the
    result."""
    config = config or SolverConfig()
    resolved = config.resolved(w.n)
    if resolved.algorithm == "local" and w.mode != "full":
        raise ConfigError("this search needs a full-domain instance")
    if resolved.algorithm == "local_cost" and w.mode != "family":
        raise ConfigError("cost-based search needs a family-mode instance")
    events: list[dict] = []
    costs = None
    if w.mode == "family":
        w.family.reset_active()
        costs = compute_costs(w.family)
    if q0 is None:
        init_costs = costs if resolved.algorithm == "local_cost" else None
        q0 = make_initial_profile(w, w.family, resolved.init, init_costs,
                                  events, resolved.tolerance)
    if resolved.algorithm == "roundup":
        result = round_up(w, q0, config)
    elif resolved.algorithm == "local":
        result = local_search(w, q0, config)
    else:
        result = ls_with_cost(w, costs, q0, config)
    result.events = events + result.events
    return result
