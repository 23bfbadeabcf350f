"""Command-line interface: solve, mobius, approx, game, oracle.

All commands read a JSON instance, print one JSON object to stdout, and are
byte-deterministic for a fixed (input, flags) pair. Exit codes: 2 malformed
input, 3 infeasible configuration, 4 oracle size guard exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

from .approx import enumerate_partitions, k_degree_approx
from .cover import MembershipProfile, worth
from .games import is_equilibrium, proportional_payoffs, shapley_payoffs
from .oracle import OracleSizeError, oracle_best_partition
from .setfn import InstanceFormatError, SetFunction, elements_of, load_instance, popcount
from .solvers import ConfigError, SolveResult, SolverConfig, solve


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc


def _load(path: str) -> tuple[SetFunction, str]:
    text = _read_file(path)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return load_instance(text), digest


def _blocks_json(blocks) -> list[list[int]]:
    return [elements_of(b) for b in blocks]


def _manifest(command: str, config: dict, digest: str, result: dict,
              trace_path: str | None) -> dict:
    return {
        "command": command,
        "config": config,
        "input_sha256": digest,
        "result": result,
        "trace_path": trace_path,
    }


def cmd_solve(args: argparse.Namespace) -> dict:
    if args.init not in ("uniform", "weight") and not args.init.startswith("file:"):
        raise ConfigError(f"unknown init {args.init!r}; use uniform, weight or file:PATH")
    w, digest = _load(args.input)
    q0 = None
    if args.init.startswith("file:"):
        q0 = MembershipProfile.from_json(_read_file(args.init[5:]), w)
    config = SolverConfig(
        algorithm=args.algorithm.replace("-", "_"),
        init="weight_proportional" if args.init == "weight" else "uniform",
        tolerance=args.tol,
        seed=args.seed,
        randomize_ties=bool(args.randomize_ties),
        selection=args.selection,
    )
    result: SolveResult = solve(w, config, q0)
    payload = {
        "final_profile": _blocks_json(result.final_profile.blocks),
        "packing": _blocks_json(result.packing),
        "total_weight": result.total_weight,
        "worth_trace": result.worth_trace,
        "iterations": result.iterations,
        "local_maximizer": result.local_maximizer,
    }
    if args.oracle_check:
        report = oracle_best_partition(w, args.tol)
        payload["oracle_best"] = report.best_weight
        payload["gap"] = report.best_weight - result.total_weight
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for event in result.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
    return _manifest(
        "solve",
        {
            "algorithm": args.algorithm,
            "init": args.init,
            "tol": args.tol,
            "seed": args.seed,
            "randomize_ties": bool(args.randomize_ties),
            "selection": args.selection,
            "oracle_check": bool(args.oracle_check),
        },
        digest,
        payload,
        args.trace,
    )


def cmd_mobius(args: argparse.Namespace) -> dict:
    w, digest = _load(args.input)
    mu = w.mobius()
    if w.mode == "full":
        order = sorted(range(1, 1 << w.n), key=lambda a: (popcount(a), a))
        table = [{"set": elements_of(a), "value": float(mu[a])} for a in order]
    else:
        table = [
            {"set": elements_of(m), "value": float(mu[p])}
            for p, m in enumerate(w.family.members)
            if m != 0
        ]
    return _manifest("mobius", {"tol": args.tol}, digest,
                     {"n": w.n, "mode": w.mode, "mu": table}, None)


def cmd_approx(args: argparse.Namespace) -> dict:
    w, digest = _load(args.input)
    res = k_degree_approx(w, args.k, args.strategy)
    sample = []
    for idx, p in enumerate(enumerate_partitions(w.n)):
        if idx >= 20:
            break
        sample.append(
            {
                "partition": _blocks_json(p.blocks),
                "F": float(res.partition_weights[idx]),
                "F_k": float(res.values_on_partitions[idx]),
            }
        )
    return _manifest(
        "approx",
        {"k": args.k, "strategy": args.strategy, "tol": args.tol},
        digest,
        {
            "k": res.k,
            "residual": res.residual,
            "mu": [{"set": elements_of(a), "value": v} for a, v in res.mu_k.items()],
            "sample_values": sample,
        },
        None,
    )


def cmd_game(args: argparse.Namespace) -> dict:
    w, digest = _load(args.input)
    profile = MembershipProfile.from_json(_read_file(args.profile), w)
    omega = args.omega if args.omega is not None else [1.0] * w.n
    if args.payoff == "shapley":
        payoffs = shapley_payoffs(w, profile, args.tol)
    else:
        payoffs = proportional_payoffs(w, profile, omega, args.tol)
    return _manifest(
        "game",
        {"payoff": args.payoff, "omega": omega, "tol": args.tol},
        digest,
        {
            "payoffs": [float(v) for v in payoffs.values],
            "worth": worth(profile, w),
            "equilibrium": is_equilibrium(w, profile, omega, args.tol),
        },
        None,
    )


def cmd_oracle(args: argparse.Namespace) -> dict:
    w, digest = _load(args.input)
    report = oracle_best_partition(w, args.tol)
    return _manifest(
        "oracle",
        {"tol": args.tol},
        digest,
        {
            "best_partition": _blocks_json(report.best_partition.blocks),
            "best_weight": report.best_weight,
            "worst_weight": report.worst_weight,
            "count_enumerated": report.count_enumerated,
            "local_maximizer_count": len(report.all_local_maximizers),
            "local_maximizers": [
                _blocks_json(p.blocks) for p in report.all_local_maximizers
            ],
        },
        None,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nbpack",
        description="weighted set packing through near-Boolean local search",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="instance JSON path")
        p.add_argument("--tol", type=float, default=None,
                       help="comparison tolerance (default 1e-9 or NBP_TOL)")

    p_solve = sub.add_parser("solve", help="run a search procedure")
    common(p_solve)
    p_solve.add_argument("--algorithm", required=True,
                         choices=["roundup", "local", "local-cost"])
    p_solve.add_argument("--init", default="uniform",
                         help="uniform | weight | file:PATH")
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--randomize-ties", action="store_true",
                         help="break selection ties with the seeded RNG")
    p_solve.add_argument("--trace", default=None, help="line-delimited event log path")
    p_solve.add_argument("--selection", choices=["min", "sum"], default="min")
    p_solve.add_argument("--oracle-check", action="store_true")
    p_solve.set_defaults(func=cmd_solve)

    p_mobius = sub.add_parser("mobius", help="print Mobius inversion values")
    common(p_mobius)
    p_mobius.set_defaults(func=cmd_mobius)

    p_approx = sub.add_parser("approx", help="bounded-degree approximation")
    common(p_approx)
    p_approx.add_argument("--k", type=int, required=True)
    p_approx.add_argument("--strategy", choices=["min_norm", "pin_singletons"],
                          default="min_norm")
    p_approx.set_defaults(func=cmd_approx)

    p_game = sub.add_parser("game", help="payoffs and equilibrium check")
    common(p_game)
    p_game.add_argument("--profile", required=True, help="vertex profile JSON path")
    p_game.add_argument("--payoff", choices=["shapley", "proportional"],
                        default="shapley")
    p_game.add_argument("--omega", type=float, nargs="+", default=None)
    p_game.set_defaults(func=cmd_game)

    p_oracle = sub.add_parser("oracle", help="exhaustive enumeration report")
    common(p_oracle)
    p_oracle.set_defaults(func=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = args.func(args)
    except InstanceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OracleSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(manifest, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
