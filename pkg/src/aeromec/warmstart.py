"""Preliminary coalition structures and the strategy dataset.

Three providers feed the stabilization loop: cold starts from
singletons, the heuristic groups the strongest links until they cover
the task, and replay looks up the nearest recorded scenario in a
newline-delimited JSON dataset and re-applies its final structure.
Recorded partitions are stored in link-quality rank space (rank 0 is
the best capacity at record time) so a structure learned on one fleet
transfers to another fleet of the same size by rank correspondence.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from .allocator import _share_cap
from .engine import Partition, StabilizationReport, build_partition
from .errors import InvalidParameter, IoFailure
from .twins import NetworkState, WeightConfig

PROVIDER_KINDS = ("cold", "replay", "heuristic")

# fleet-typical midpoints used to make features scale-free
_TASK_MID = 1.2e8  # bits
_THETA_MID = 175.0
_DEADLINE_MID = 0.325
_N_MID = 17.5
_CACHE_MID = 1.2e7  # bits


@dataclass(frozen=True)
class WarmStartProvider:
    kind: str
    dataset_path: str | None = None

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise InvalidParameter(f"unknown warm-start kind: {self.kind!r}")
        if self.kind == "replay" and not self.dataset_path:
            raise InvalidParameter("replay provider requires a dataset path")


@dataclass(frozen=True)
class StrategyRecord:
    feature_vector: tuple[float, ...]
    partition: tuple[tuple[int, ...], ...]  # rank space
    achieved_utility: float


@dataclass(frozen=True)
class ProposeResult:
    partition: Partition
    fallback: bool  # replay had no usable record and fell back


def _caps(state: NetworkState) -> list[float]:
    return [_share_cap(state, j, state.capacities[j]) for j in range(state.n_uavs)]


def feature_vector(state: NetworkState) -> tuple[float, ...]:
    """Scale-free scenario descriptor for nearest-neighbor lookup."""
    caps = _caps(state)
    n = state.n_uavs
    return (
        state.med.task_size / _TASK_MID,
        state.med.complexity / _THETA_MID,
        state.med.deadline / _DEADLINE_MID,
        n / _N_MID,
        sum(caps) / _TASK_MID,
        max(caps) / _CACHE_MID,
        (sum(caps) / n) / _CACHE_MID,
    )


def _capacity_ranks(state: NetworkState) -> list[int]:
    """ranks[r] = UAV index with the r-th best capacity (ties by index)."""
    return sorted(range(state.n_uavs), key=lambda j: (-state.capacities[j], j))


def to_rank_space(partition: Partition, state: NetworkState):
    order = _capacity_ranks(state)
    rank_of = {j: r for r, j in enumerate(order)}
    groups = [sorted(rank_of[j] for j in g) for g in partition.coalitions]
    return tuple(tuple(g) for g in sorted(groups))


def from_rank_space(groups, state: NetworkState, weights: WeightConfig) -> Partition:
    order = _capacity_ranks(state)
    sets = sorted(tuple(sorted(order[r] for r in g)) for g in groups)
    return build_partition(sets, state, weights)


def _heuristic_sets(state: NetworkState) -> list[tuple[int, ...]]:
    caps = _caps(state)
    order = sorted(range(state.n_uavs), key=lambda j: (-caps[j], j))
    group: list[int] = []
    covered = 0.0
    rest_from = len(order)
    for pos, j in enumerate(order):
        group.append(j)
        covered += caps[j]
        if covered >= state.med.task_size:
            rest_from = pos + 1
            break
    sets = [tuple(sorted(group))]
    sets.extend((j,) for j in sorted(order[rest_from:]))
    return sets


def _load_records(path: str) -> list[StrategyRecord]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError:
        return []
    records = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
            rec = StrategyRecord(
                feature_vector=tuple(float(x) for x in raw["feature_vector"]),
                partition=tuple(
                    tuple(int(r) for r in g) for g in raw["partition"]
                ),
                achieved_utility=float(raw["achieved_utility"]),
            )
        except (KeyError, TypeError, ValueError):
            continue  # skip malformed lines, keep the dataset usable
        if all(math.isfinite(x) for x in rec.feature_vector):
            records.append(rec)
    return records


def _nearest(records, features, n: int) -> StrategyRecord | None:
    best = None
    best_d = math.inf
    for rec in records:
        if sum(len(g) for g in rec.partition) != n:
            continue
        if len(rec.feature_vector) != len(features):
            continue
        d = math.dist(rec.feature_vector, features)
        if d < best_d:
            best, best_d = rec, d
    return best


def propose(
    provider: WarmStartProvider,
    state: NetworkState,
    weights: WeightConfig,
) -> ProposeResult:
    """A preliminary structure for stabilize; replay may fall back."""
    if provider.kind == "cold":
        sets = [(j,) for j in range(state.n_uavs)]
        return ProposeResult(build_partition(sets, state, weights), fallback=False)
    if provider.kind == "heuristic":
        return ProposeResult(
            build_partition(_heuristic_sets(state), state, weights), fallback=False
        )
    records = _load_records(provider.dataset_path)
    rec = _nearest(records, feature_vector(state), state.n_uavs)
    if rec is None:
        return ProposeResult(
            build_partition(_heuristic_sets(state), state, weights), fallback=True
        )
    return ProposeResult(from_rank_space(rec.partition, state, weights), fallback=False)


def record(
    dataset_path: str,
    state: NetworkState,
    report: StabilizationReport,
) -> StrategyRecord:
    """Append the converged structure to the dataset; returns the record."""
    if not report.converged:
        raise InvalidParameter("only converged stabilization results are recorded")
    total = sum(a.coalition_utility for a in report.final.allocations)
    rec = StrategyRecord(
        feature_vector=feature_vector(state),
        partition=to_rank_space(report.final, state),
        achieved_utility=total,
    )
    payload = json.dumps(
        {
            "feature_vector": list(rec.feature_vector),
            "partition": [list(g) for g in rec.partition],
            "achieved_utility": rec.achieved_utility,
        }
    )
    try:
        directory = os.path.dirname(dataset_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(dataset_path, "a", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot append to {dataset_path}: {exc}") from exc
    return rec
