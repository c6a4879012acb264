"""Slot loop, fidelity deviation analysis, aggregation and file output.

Each slot snapshot is handed to the configured strategy, the resulting
partition is feasibility-checked, and one metrics row comes out.  The
fidelity analysis replays the plan with the chips running at a relative
offset from the twin's estimate and reprices energy per the deviation
model: computation durations stretch, chip power stays at the planned
frequency, hover follows the stretched completion time.

CSV output uses shortest-roundtrip float formatting so a (config, seed)
pair reproduces byte-identical files.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from . import __version__
from .allocator import AllocationResult, assert_allocation_feasible
from .baselines import StrategyId, grand_coalition, nash_equilibrium
from .engine import Partition, serving_index, stabilize
from .errors import EmptyAggregate, InvalidParameter, IoFailure
from .linkenergy import EnergyBreakdown
from .scenario import ScenarioConfig, config_to_dict, generate_scenario
from .twins import NetworkState
from .warmstart import propose

STRATEGY_ORDER = (StrategyId.COALITION_GAME, StrategyId.GRAND_COALITION, StrategyId.NASH)


@dataclass(frozen=True)
class SlotMetrics:
    """One row of the per-slot output."""

    slot: int
    strategy: StrategyId
    total_energy: float
    comm_energy: float
    compute_energy: float
    hover_energy: float
    estimated_energy: float
    actual_energy: float
    completion_time: float
    utilization: float
    coalition_utility: float
    mean_participant_utility: float
    iterations: int
    converged: bool
    n_coalitions: int
    deadline_violated: bool
    warm_fallback: bool


@dataclass(frozen=True)
class FidelityOutcome:
    """Planned versus realized energy once the chip offset is applied."""

    estimated: EnergyBreakdown
    actual: EnergyBreakdown
    deadline_violated: bool


def apply_fidelity(
    allocation: AllocationResult, state: NetworkState, delta: float
) -> FidelityOutcome:
    """Reprice one coalition's plan with chips running at f*(1 + delta).

    Only computation durations change: transmission is unaffected, chip
    power keeps the planned f (the twin billed the chip for that setting),
    and every member hovers until the stretched completion time.  A
    stretched completion past the deadline is flagged, not raised.
    delta = 0 reproduces the planned breakdown bit for bit.
    """
    if delta <= -1.0:
        raise InvalidParameter(f"fidelity delta must be > -1, got {delta}")
    med = state.med
    theta = med.complexity
    rows = []
    t_done = 0.0
    for i, j in enumerate(allocation.members):
        s = allocation.shares[i]
        f = allocation.frequencies[i]
        if s > 0.0:
            c = state.spectral_efficiency(j) * allocation.bandwidths[i]
            t_tr = s / c
            t_cp = theta * s / (f * (1.0 + delta))
        else:
            t_tr = 0.0
            t_cp = 0.0
        t_done = max(t_done, t_tr + t_cp)
        rows.append((state.uavs[j], f, t_tr, t_cp))
    e_comm = 0.0
    e_comp = 0.0
    e_hover = 0.0
    for uav, f, t_tr, t_cp in rows:
        e_comm += med.tx_power * t_tr
        e_comp += uav.chip_coeff * f**3 * t_cp
        e_hover += uav.hover_power * t_done
    actual = EnergyBreakdown(
        comm=e_comm,
        compute=e_comp,
        hover=e_hover,
        total=e_comm + e_comp + e_hover,
        completion_time=t_done,
    )
    violated = t_done > med.deadline * (1.0 + 1e-9)
    return FidelityOutcome(
        estimated=allocation.energy, actual=actual, deadline_violated=violated
    )


def _check_partition_feasible(partition: Partition, state: NetworkState) -> None:
    # defense in depth: no metric row leaves without a feasibility pass
    total_s = 0.0
    total_b = 0.0
    for alloc in partition.allocations:
        assert_allocation_feasible(state, alloc)
        total_s += sum(alloc.shares)
        total_b += sum(alloc.bandwidths)
    slack = 1.0 + 1e-9
    assert total_s <= state.med.task_size * slack, "joint data budget (C4)"
    assert total_b <= state.env_bandwidth * slack, "joint bandwidth budget (C2)"


def _cooperative_utilization(alloc: AllocationResult, state: NetworkState) -> float:
    """Cycle budget fraction over the serving coalition's shared window.

    Cycles spent are theta*s_j per busy member; the budget is each
    member's peak rate over the coalition completion window.
    """
    window = alloc.energy.completion_time
    if window <= 0.0:
        return 0.0
    theta = state.med.complexity
    used = sum(theta * s for s in alloc.shares if s > 0.0)
    budget = sum(state.uavs[j].compute_max * window for j in alloc.members)
    return used / budget


def _selfish_utilization(partition: Partition, state: NetworkState) -> float:
    """Same fraction for independent servers, each on its own window."""
    theta = state.med.complexity
    used = 0.0
    budget = 0.0
    for coalition, alloc in zip(partition.coalitions, partition.allocations):
        window = alloc.energy.completion_time
        if window <= 0.0:
            continue
        used += sum(theta * s for s in alloc.shares if s > 0.0)
        budget += sum(state.uavs[j].compute_max * window for j in coalition)
    if budget <= 0.0:
        return 0.0
    return used / budget


def _sum_energy(partition: Partition) -> tuple[float, float, float, float]:
    comm = sum(a.energy.comm for a in partition.allocations)
    comp = sum(a.energy.compute for a in partition.allocations)
    hover = sum(a.energy.hover for a in partition.allocations)
    return comm, comp, hover, comm + comp + hover


def run_slot(state: NetworkState, config: ScenarioConfig) -> SlotMetrics:
    """Dispatch one snapshot to the configured strategy and take metrics."""
    weights = config.weights
    strategy = config.strategy
    fallback = False
    if strategy is StrategyId.COALITION_GAME:
        proposal = propose(config.warm_start, state, weights)
        fallback = proposal.fallback
        report = stabilize(proposal.partition, state, weights)
        partition = report.final
        iterations = report.iterations
        converged = report.converged
        serving = partition.allocations[serving_index(partition)]
        utilization = _cooperative_utilization(serving, state)
        coalition_utility = serving.coalition_utility
    elif strategy is StrategyId.GRAND_COALITION:
        partition = grand_coalition(state, weights)
        iterations = 0
        converged = True
        serving = partition.allocations[0]
        utilization = _cooperative_utilization(serving, state)
        coalition_utility = serving.coalition_utility
    elif strategy is StrategyId.NASH:
        nash = nash_equilibrium(state, weights)
        partition = nash.partition
        iterations = nash.rounds
        converged = nash.converged
        utilization = _selfish_utilization(partition, state)
        coalition_utility = sum(a.coalition_utility for a in partition.allocations)
    else:
        raise InvalidParameter(f"unknown strategy {strategy!r}")

    _check_partition_feasible(partition, state)
    comm, comp, hover, total = _sum_energy(partition)
    estimated = 0.0
    actual = 0.0
    violated = False
    completion = 0.0
    for alloc in partition.allocations:
        outcome = apply_fidelity(alloc, state, config.fidelity_delta)
        estimated += outcome.estimated.total
        actual += outcome.actual.total
        violated = violated or outcome.deadline_violated
        completion = max(completion, outcome.estimated.completion_time)
    participant_sum = sum(
        sum(a.participant_utilities) for a in partition.allocations
    )
    return SlotMetrics(
        slot=state.slot,
        strategy=strategy,
        total_energy=total,
        comm_energy=comm,
        compute_energy=comp,
        hover_energy=hover,
        estimated_energy=estimated,
        actual_energy=actual,
        completion_time=completion,
        utilization=utilization,
        coalition_utility=coalition_utility,
        mean_participant_utility=participant_sum / state.n_uavs,
        iterations=iterations,
        converged=converged,
        n_coalitions=len(partition.coalitions),
        deadline_violated=violated,
        warm_fallback=fallback,
    )


def run_scenario(config: ScenarioConfig) -> list[SlotMetrics]:
    """Sample the scenario and run every slot under the configured strategy."""
    return [run_slot(state, config) for state in generate_scenario(config)]


def run_many(
    configs: Sequence[ScenarioConfig], parallel: bool = True
) -> list[list[SlotMetrics]]:
    """run_scenario over many configs, in order, optionally across processes."""
    if not parallel or len(configs) <= 1:
        return [run_scenario(c) for c in configs]
    with ProcessPoolExecutor() as pool:
        chunk = max(1, len(configs) // 32)
        return list(pool.map(run_scenario, configs, chunksize=chunk))


METRICS_COLUMNS = (
    "slot",
    "strategy",
    "seed",
    "sweep_param",
    "sweep_value",
    "fidelity_delta",
    "total_energy",
    "comm_energy",
    "compute_energy",
    "hover_energy",
    "estimated_energy",
    "actual_energy",
    "completion_time",
    "utilization",
    "coalition_utility",
    "mean_participant_utility",
    "iterations",
    "converged",
    "n_coalitions",
    "deadline_violated",
    "warm_fallback",
)

_AGG_FIELDS = (
    "total_energy",
    "comm_energy",
    "compute_energy",
    "hover_energy",
    "estimated_energy",
    "actual_energy",
    "completion_time",
    "utilization",
    "coalition_utility",
    "mean_participant_utility",
    "iterations",
    "converged",
    "n_coalitions",
    "deadline_violated",
    "warm_fallback",
)


def metrics_records(
    metrics: Iterable[SlotMetrics],
    seed: int,
    fidelity_delta: float = 0.0,
    sweep_param: str = "",
    sweep_value: float | str = "",
) -> list[dict]:
    """Attach run context to slot rows, yielding flat CSV-ready records."""
    records = []
    for m in metrics:
        rec = dataclasses.asdict(m)
        rec["strategy"] = m.strategy.value
        rec["seed"] = seed
        rec["sweep_param"] = sweep_param
        rec["sweep_value"] = sweep_value
        rec["fidelity_delta"] = fidelity_delta
        records.append(rec)
    return records


def _with_param(config: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    try:
        current = getattr(config, param)
    except AttributeError as exc:
        raise InvalidParameter(f"unknown sweep parameter {param!r}") from exc
    if isinstance(current, tuple):
        new: object = (float(value), float(value))  # pin range to a point
    elif isinstance(current, bool) or not isinstance(current, (int, float)):
        raise InvalidParameter(f"parameter {param!r} is not sweepable")
    elif isinstance(current, int):
        new = int(value)
    else:
        new = float(value)
    return replace(config, **{param: new})


def sweep_records(
    base: ScenarioConfig,
    param: str,
    values: Sequence[float],
    seeds: Sequence[int],
    strategies: Sequence[StrategyId] = STRATEGY_ORDER,
    parallel: bool = True,
) -> list[dict]:
    """Cross one swept parameter with seeds and strategies; flat records out."""
    if not values:
        raise InvalidParameter("sweep needs at least one value")
    if not seeds:
        raise InvalidParameter("sweep needs at least one seed")
    jobs = []
    for value in values:
        pinned = _with_param(base, param, value)
        for seed in seeds:
            for strategy in strategies:
                jobs.append(
                    (value, seed, replace(pinned, seed=seed, strategy=strategy))
                )
    results = run_many([cfg for _, _, cfg in jobs], parallel=parallel)
    records = []
    for (value, seed, cfg), metrics in zip(jobs, results):
        records.extend(
            metrics_records(
                metrics,
                seed=seed,
                fidelity_delta=cfg.fidelity_delta,
                sweep_param=param,
                sweep_value=value,
            )
        )
    return records


def aggregate(runs: Sequence) -> list[dict]:
    """Mean and sample stdev of each metric per (strategy, sweep point).

    Accepts SlotMetrics (grouped by strategy alone) or flat records from
    metrics_records/sweep_records (grouped by strategy and sweep point).
    Single-row groups report stdev 0.
    """
    if not runs:
        raise EmptyAggregate("nothing to aggregate")
    if isinstance(runs[0], SlotMetrics):
        records: Sequence[Mapping] = metrics_records(runs, seed=-1)
    else:
        records = runs
    groups: dict[tuple, list[Mapping]] = {}
    for rec in records:
        key = (rec["strategy"], rec.get("sweep_param", ""), rec.get("sweep_value", ""))
        groups.setdefault(key, []).append(rec)
    rows = []
    for (strategy, sweep_param, sweep_value), members in groups.items():
        row: dict = {
            "strategy": strategy,
            "sweep_param": sweep_param,
            "sweep_value": sweep_value,
            "n_rows": len(members),
        }
        for field in _AGG_FIELDS:
            values = [float(rec[field]) for rec in members]
            row[f"{field}_mean"] = statistics.fmean(values)
            row[f"{field}_std"] = statistics.stdev(values) if len(values) > 1 else 0.0
        rows.append(row)
    return rows


SUMMARY_COLUMNS = ("strategy", "sweep_param", "sweep_value", "n_rows") + tuple(
    f"{field}_{stat}" for field in _AGG_FIELDS for stat in ("mean", "std")
)


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(row[col]) for col in columns])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_metrics_csv(records: Sequence[Mapping], path: str) -> None:
    """Per-slot rows with the fixed column set, shortest-roundtrip floats."""
    _write_csv(path, METRICS_COLUMNS, records)


def write_summary_csv(rows: Sequence[Mapping], path: str) -> None:
    """Aggregate rows from aggregate() with the fixed column set."""
    _write_csv(path, SUMMARY_COLUMNS, rows)


def write_run_meta(config: ScenarioConfig, path: str, extra: Mapping | None = None) -> None:
    """Resolved configuration and toolchain versions; no timestamps."""
    import numpy
    import scipy

    meta: dict = {
        "config": config_to_dict(config),
        "versions": {
            "aeromec": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
    }
    if extra:
        meta.update(extra)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
