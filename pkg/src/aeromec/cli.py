"""Command line front end: run, sweep, oracle and record workflows."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .allocator import GridOracleConfig, grid_gap_bound, grid_oracle, solve_f3
from .baselines import StrategyId
from .engine import singleton_partition, stabilize
from .errors import AeromecError
from .harness import (
    aggregate,
    metrics_records,
    run_scenario,
    sweep_records,
    write_metrics_csv,
    write_run_meta,
    write_summary_csv,
)
from .scenario import ScenarioConfig, generate_scenario, load_config
from .warmstart import WarmStartProvider
from .warmstart import record as record_structure


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON scenario config; defaults apply otherwise")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument(
        "--strategy",
        choices=[s.value for s in StrategyId],
        help="override the assignment strategy",
    )
    parser.add_argument(
        "--warm-start",
        choices=["cold", "heuristic", "replay"],
        help="override the stabilization warm start",
    )
    parser.add_argument(
        "--warm-start-data", help="recorded-structure dataset (replay warm start)"
    )
    parser.add_argument("--slots", type=int, help="override the slot count")
    parser.add_argument(
        "--fidelity-delta",
        type=float,
        help="relative twin frequency deviation applied to actual energy",
    )
    parser.add_argument("--out", required=True, help="output directory or file")


def _build_config(args: argparse.Namespace) -> ScenarioConfig:
    config = load_config(args.config) if args.config else ScenarioConfig()
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.slots is not None:
        overrides["n_slots"] = args.slots
    if args.strategy is not None:
        overrides["strategy"] = StrategyId(args.strategy)
    if args.warm_start is not None:
        overrides["warm_start"] = WarmStartProvider(args.warm_start, args.warm_start_data)
    elif args.warm_start_data is not None:
        overrides["warm_start"] = WarmStartProvider("replay", args.warm_start_data)
    if args.fidelity_delta is not None:
        overrides["fidelity_delta"] = args.fidelity_delta
    return replace(config, **overrides) if overrides else config


def _write_outputs(records: list[dict], config: ScenarioConfig, out: Path, extra=None):
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(records, str(out / "metrics.csv"))
    write_summary_csv(aggregate(records), str(out / "summary.csv"))
    write_run_meta(config, str(out / "run_meta.json"), extra=extra)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    metrics = run_scenario(config)
    records = metrics_records(
        metrics, seed=config.seed, fidelity_delta=config.fidelity_delta
    )
    _write_outputs(records, config, Path(args.out))
    print(f"wrote {len(records)} slot rows to {args.out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    seeds = list(range(args.seeds))
    strategies = [StrategyId(args.strategy)] if args.strategy else None
    records = sweep_records(
        config,
        args.param,
        values,
        seeds,
        **({"strategies": strategies} if strategies else {}),
        parallel=args.parallel,
    )
    extra = {"sweep_param": args.param, "sweep_values": values, "n_seeds": args.seeds}
    _write_outputs(records, config, Path(args.out), extra=extra)
    print(f"wrote {len(records)} slot rows to {args.out}")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    weights = _build_config(args).weights
    oracle_cfg = GridOracleConfig(points_per_axis=args.points)
    vectors = []
    for i in range(args.count):
        n = 1 + i % 3
        instance = ScenarioConfig(n_uavs=n, n_slots=1, seed=args.seed + i)
        state = generate_scenario(instance)[0]
        coalition = tuple(range(n))
        vectors.append(
            {
                "seed": instance.seed,
                "n_uavs": n,
                "grid_objective": grid_oracle(coalition, state, weights, oracle_cfg),
                "solve_objective": solve_f3(coalition, state, weights).coalition_utility,
                "bound": grid_gap_bound(coalition, state, weights, args.points),
            }
        )
    payload = {"points_per_axis": args.points, "base_seed": args.seed, "vectors": vectors}
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(vectors)} solver vectors to {args.out}")
    return 0


def _cmd_record(args: argparse.Namespace) -> int:
    config = _build_config(args)
    written = 0
    for state in generate_scenario(config):
        if state.med.task_size <= 0.0:
            continue  # nothing to assign; the structure carries no signal
        report = stabilize(
            singleton_partition(state, config.weights), state, config.weights
        )
        if report.converged:
            record_structure(args.out, state, report)
            written += 1
    print(f"recorded {written} partition structures to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeromec",
        description="Aerial MEC task-assignment simulator and strategy toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one scenario; writes metrics, summary, meta")
    _add_common(run)
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="vary one config parameter over a list")
    _add_common(sweep)
    sweep.add_argument("--param", required=True, help="ScenarioConfig field to vary")
    sweep.add_argument(
        "--values", required=True, help="comma-separated values for the parameter"
    )
    sweep.add_argument(
        "--seeds", type=int, default=20, help="number of seeds (0..N-1) per value"
    )
    sweep.add_argument(
        "--parallel",
        action=argparse.BooleanOptionalAction,
        default=(os.cpu_count() or 1) > 1,
        help="run sweep jobs across processes",
    )
    sweep.set_defaults(func=_cmd_sweep)

    oracle = sub.add_parser(
        "oracle", help="regenerate frozen grid-search vectors for solver tests"
    )
    _add_common(oracle)
    oracle.add_argument("--count", type=int, default=60, help="number of instances")
    oracle.add_argument("--points", type=int, default=50, help="grid points per axis")
    oracle.set_defaults(func=_cmd_oracle, seed_default=7)

    record = sub.add_parser(
        "record", help="build a replay dataset from converged stabilizations"
    )
    _add_common(record)
    record.set_defaults(func=_cmd_record)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "oracle" and args.seed is None:
        args.seed = args.seed_default
    try:
        return args.func(args)
    except AeromecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
