"""Weighted set packing via near-Boolean optimization.

Set functions live on the full subset lattice or on a closed family of
feasible sets. Element memberships are points in unit simplices; the worth
of a membership profile is the multilinear extension of the set function,
and gradient-based local search over profiles terminates at partitions
from which packings are read off.
"""

from ._backend import BACKEND
from .approx import ApproxResult, bell_number, enumerate_partitions, k_degree_approx
from .cover import (
    GradientRow,
    MembershipProfile,
    PartitionProfile,
    chosen_groups,
    conditional_weight,
    derivative,
    gradient,
    induced_partition,
    is_exact_support,
    worth,
    worth_decomposition,
)
from .games import PayoffVector, is_equilibrium, proportional_payoffs, shapley_payoffs
from .oracle import OracleReport, OracleSizeError, oracle_best_partition, partition_is_local_max
from .setfn import (
    CostFunction,
    Family,
    InstanceFormatError,
    SetFunction,
    compute_costs,
    dump_instance,
    load_instance,
    mobius_inversion,
    update_costs_after_block,
    zeta_transform,
)
from .solvers import (
    ConfigError,
    SolveResult,
    SolverConfig,
    extract_packing,
    is_local_maximizer,
    local_search,
    ls_with_cost,
    round_up,
    solve,
)

__all__ = [
    "BACKEND",
    "ApproxResult",
    "ConfigError",
    "CostFunction",
    "Family",
    "GradientRow",
    "InstanceFormatError",
    "MembershipProfile",
    "OracleReport",
    "OracleSizeError",
    "PartitionProfile",
    "PayoffVector",
    "SetFunction",
    "SolveResult",
    "SolverConfig",
    "bell_number",
    "chosen_groups",
    "compute_costs",
    "conditional_weight",
    "derivative",
    "dump_instance",
    "enumerate_partitions",
    "extract_packing",
    "gradient",
    "induced_partition",
    "is_equilibrium",
    "is_exact_support",
    "is_local_maximizer",
    "k_degree_approx",
    "load_instance",
    "local_search",
    "ls_with_cost",
    "mobius_inversion",
    "oracle_best_partition",
    "partition_is_local_max",
    "proportional_payoffs",
    "round_up",
    "shapley_payoffs",
    "solve",
    "update_costs_after_block",
    "worth",
    "worth_decomposition",
    "zeta_transform",
]
__version__ = "0.1.0"
