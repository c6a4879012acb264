"""Merge-and-split coalition formation over the shared uplink.

Exactly one coalition serves the device in any slot: the one whose
allocation earns the highest value, ties broken by list position.  Every
other coalition idles in energy-saving mode with the all-zero
allocation, so its members' utilities are 0 until their group wins the
race.  Rules compare these effective utilities.  That makes merging
attractive for benched groups that can jointly overtake the incumbent
(every member goes from 0 to a positive payoff) and for serving
coalitions absorbing a cheaper link, and makes splitting attractive for
serving members whose hover or compute costs outweigh their share.

Rule application is Pareto-strict: a merge or split is applied only when
no affected member loses and at least one strictly gains.  Serving
status creates externalities for untouched coalitions (the incumbent can
be benched by an overtaking merge), so a visited-partition guard
protects the stabilization loop against revisiting structures; in
measured runs it never fires.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .allocator import AllocationResult, _share_cap, solve_f3
from .errors import InvalidComparison, InvalidParameter
from .linkenergy import EnergyBreakdown
from .twins import MBYTE_BITS, NetworkState, WeightConfig

SPLIT_ENUM_CAP = 6
DEFAULT_MAX_ROUNDS = 10_000

_ZERO_ENERGY = EnergyBreakdown(
    comm=0.0, compute=0.0, hover=0.0, total=0.0, completion_time=0.0
)


@dataclass(frozen=True)
class Partition:
    """Disjoint coalitions covering all UAVs, with effective allocations.

    ``allocations[k]`` is the solver result for ``coalitions[k]`` when it
    is the serving coalition and the all-zero allocation otherwise.
    ``generation`` counts applied merge/split rules.
    """

    coalitions: tuple[tuple[int, ...], ...]
    allocations: tuple[AllocationResult, ...]
    generation: int = 0


@dataclass(frozen=True)
class Fragment:
    """A few coalitions with their allocations, for Pareto comparison."""

    coalitions: tuple[tuple[int, ...], ...]
    allocations: tuple[AllocationResult, ...]


@dataclass(frozen=True)
class StabilizationReport:
    final: Partition
    iterations: int  # rule evaluations
    merges_applied: int
    splits_applied: int
    converged: bool


def _zero_allocation(members: tuple[int, ...]) -> AllocationResult:
    zeros = (0.0,) * len(members)
    return AllocationResult(
        members=members,
        shares=zeros,
        bandwidths=zeros,
        frequencies=zeros,
        coalition_utility=0.0,
        participant_utilities=zeros,
        energy=_ZERO_ENERGY,
    )


def _normalize_sets(sets, state: NetworkState) -> tuple[tuple[int, ...], ...]:
    """Validate disjointness and coverage; sort members within sets."""
    out = []
    seen: set[int] = set()
    for group in sets:
        members = tuple(sorted(group))
        if not members:
            raise InvalidParameter("empty coalition in partition")
        for j in members:
            if j in seen:
                raise InvalidParameter(f"uav {j} appears in two coalitions")
            seen.add(j)
        out.append(members)
    if seen != set(range(state.n_uavs)):
        raise InvalidParameter("partition does not cover the uav set")
    return tuple(out)


def _solve(cache: dict, members: tuple[int, ...], state, weights) -> AllocationResult:
    key = frozenset(members)
    hit = cache.get(key)
    if hit is None:
        hit = cache[key] = solve_f3(members, state, weights)
    return hit


def _serving_position(values) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def _effective_partition(sets, cache, state, weights, generation) -> Partition:
    solved = [_solve(cache, g, state, weights) for g in sets]
    champ = _serving_position([r.coalition_utility for r in solved])
    allocations = tuple(
        solved[i] if i == champ else _zero_allocation(sets[i])
        for i in range(len(sets))
    )
    return Partition(coalitions=tuple(sets), allocations=allocations, generation=generation)


def build_partition(
    sets,
    state: NetworkState,
    weights: WeightConfig,
    generation: int = 0,
) -> Partition:
    """Solve every coalition and mark the serving one; others get zeros."""
    return _effective_partition(_normalize_sets(sets, state), {}, state, weights, generation)


def singleton_partition(state: NetworkState, weights: WeightConfig) -> Partition:
    """The all-singletons starting structure."""
    return build_partition([(j,) for j in range(state.n_uavs)], state, weights)


def serving_index(partition: Partition) -> int:
    """Position of the coalition serving the device (others hold zeros)."""
    return _serving_position([a.coalition_utility for a in partition.allocations])


def partition_to_lists(partition: Partition) -> list[list[int]]:
    """JSON-friendly structure: a list of sorted member lists."""
    return [list(g) for g in partition.coalitions]


def partition_from_lists(
    lists, state: NetworkState, weights: WeightConfig
) -> Partition:
    return build_partition([tuple(g) for g in lists], state, weights)


def fragment_of(partition: Partition, positions) -> Fragment:
    """The sub-collection of coalitions at the given positions."""
    try:
        coalitions = tuple(partition.coalitions[k] for k in positions)
        allocations = tuple(partition.allocations[k] for k in positions)
    except IndexError as exc:
        raise InvalidParameter(f"coalition position out of range: {positions}") from exc
    return Fragment(coalitions=coalitions, allocations=allocations)


def _fragment_utilities(fragment: Fragment) -> dict[int, float]:
    util: dict[int, float] = {}
    for group, alloc in zip(fragment.coalitions, fragment.allocations):
        for i, j in enumerate(group):
            if j in util:
                raise InvalidComparison(f"uav {j} appears twice in fragment")
            util[j] = alloc.participant_utilities[i]
    return util


def pareto_dominates(a: Fragment, b: Fragment) -> bool:
    """True iff a pays every covered UAV at least b, one strictly more."""
    ua = _fragment_utilities(a)
    ub = _fragment_utilities(b)
    if ua.keys() != ub.keys():
        raise InvalidComparison("fragments cover different uav subsets")
    strict = False
    for j, va in ua.items():
        vb = ub[j]
        if va < vb:
            return False
        if va > vb:
            strict = True
    return strict


def _candidate_sets_merge(sets, k1: int, k2: int) -> tuple[tuple[int, ...], ...]:
    lo, hi = min(k1, k2), max(k1, k2)
    merged = tuple(sorted(sets[k1] + sets[k2]))
    out = []
    for i, g in enumerate(sets):
        if i == lo:
            out.append(merged)
        elif i != hi:
            out.append(g)
    return tuple(out)


def _try_merge(partition, k1, k2, state, weights, cache):
    sets = partition.coalitions
    n = len(sets)
    if not (0 <= k1 < n and 0 <= k2 < n):
        raise InvalidParameter(f"coalition position out of range: {(k1, k2)}")
    if k1 == k2:
        raise InvalidComparison("cannot merge a coalition with itself")
    new_sets = _candidate_sets_merge(sets, k1, k2)
    candidate = _effective_partition(
        new_sets, cache, state, weights, partition.generation + 1
    )
    merged_pos = min(k1, k2)
    after = fragment_of(candidate, (merged_pos,))
    before = fragment_of(partition, (k1, k2))
    if pareto_dominates(after, before):
        return candidate
    return None


def try_merge(
    partition: Partition,
    k1: int,
    k2: int,
    state: NetworkState,
    weights: WeightConfig,
):
    """Merged partition if the union Pareto-beats the pair, else None."""
    return _try_merge(partition, k1, k2, state, weights, {})


def _validated_bipartition(group, bipartition):
    try:
        part1, part2 = bipartition
    except (TypeError, ValueError) as exc:
        raise InvalidComparison("bipartition must have exactly two parts") from exc
    p1 = tuple(sorted(part1))
    p2 = tuple(sorted(part2))
    if not p1 or not p2:
        raise InvalidComparison("bipartition parts must be non-empty")
    if set(p1) & set(p2):
        raise InvalidComparison("bipartition parts overlap")
    if tuple(sorted(p1 + p2)) != group:
        raise InvalidComparison("bipartition does not cover the coalition")
    if min(p1) > min(p2):
        p1, p2 = p2, p1
    return p1, p2


def _try_split(partition, k, bipartition, state, weights, cache):
    sets = partition.coalitions
    if not 0 <= k < len(sets):
        raise InvalidParameter(f"coalition position out of range: {k}")
    p1, p2 = _validated_bipartition(sets[k], bipartition)
    new_sets = sets[:k] + (p1, p2) + sets[k + 1 :]
    candidate = _effective_partition(
        new_sets, cache, state, weights, partition.generation + 1
    )
    after = fragment_of(candidate, (k, k + 1))
    before = fragment_of(partition, (k,))
    if pareto_dominates(after, before):
        return candidate
    return None


def try_split(
    partition: Partition,
    k: int,
    bipartition,
    state: NetworkState,
    weights: WeightConfig,
):
    """Split partition if the parts Pareto-beat the coalition, else None."""
    return _try_split(partition, k, bipartition, state, weights, {})


def _bipartitions(group):
    """Deterministic bipartition stream for one coalition.

    Up to SPLIT_ENUM_CAP members: all 2^(m-1) - 1 bipartitions, anchored
    on the smallest member, ascending mask order.  Larger coalitions:
    single-member peel-offs only, ascending member.
    """
    m = len(group)
    if m < 2:
        return
    if m <= SPLIT_ENUM_CAP:
        rest = group[1:]
        for mask in range(2 ** len(rest) - 1):
            part1 = [group[0]]
            part2 = []
            for i, j in enumerate(rest):
                if mask >> i & 1:
                    part1.append(j)
                else:
                    part2.append(j)
            yield tuple(part1), tuple(part2)
    else:
        for j in group:
            yield (j,), tuple(x for x in group if x != j)


def _canonical(sets) -> frozenset:
    return frozenset(frozenset(g) for g in sets)


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self) -> bool:
        if self.used >= self.limit:
            return False
        self.used += 1
        return True


def stabilize(
    initial: Partition,
    state: NetworkState,
    weights: WeightConfig,
    limits: dict | None = None,
) -> StabilizationReport:
    """Run merge/split sweeps until no rule applies (Pareto-strict).

    Merge candidates are scanned over ascending position pairs, split
    candidates over ascending positions and the deterministic bipartition
    stream; the first applicable rule is applied and the sweep restarts.
    ``iterations`` counts rule evaluations.  The hard stop ``max_rounds``
    (limits key, default 10^4) bounds evaluations; hitting it reports
    converged=False.  A candidate whose structure was already visited is
    skipped (cycle guard); if only such candidates remain the report is
    converged=False as well.

    Candidates made only of benched coalitions are screened with a value
    upper bound before solving: their members sit at zero on both sides
    unless the new coalition overtakes the serving one, so a bound below
    the serving value rules the candidate out exactly.  Screened
    candidates do not count as evaluations.
    """
    max_rounds = DEFAULT_MAX_ROUNDS
    if limits is not None:
        max_rounds = limits.get("max_rounds", DEFAULT_MAX_ROUNDS)
    if not isinstance(max_rounds, int) or max_rounds <= 0:
        raise InvalidParameter(f"max_rounds must be a positive integer: {max_rounds}")

    cache: dict = {}
    current = _effective_partition(
        _normalize_sets(initial.coalitions, state),
        cache,
        state,
        weights,
        initial.generation,
    )
    visited = {_canonical(current.coalitions)}
    budget = _Budget(max_rounds)
    merges = splits = 0
    converged = False

    phi = weights.satisfaction
    task = state.med.task_size
    member_caps = [_share_cap(state, j, state.capacities[j]) for j in range(state.n_uavs)]

    def value_bound(cap_sum: float) -> float:
        # ceiling on any coalition value: full caps served at zero comm cost
        return phi * math.log1p(min(task, cap_sum) / MBYTE_BITS)

    while True:
        applied = False
        guarded = False
        out_of_budget = False

        serving = serving_index(current)
        champ_value = current.allocations[serving].coalition_utility
        cap_sums = [sum(member_caps[j] for j in g) for g in current.coalitions]

        n = len(current.coalitions)
        for k1 in range(n):
            for k2 in range(k1 + 1, n):
                if (
                    k1 != serving
                    and k2 != serving
                    and value_bound(cap_sums[k1] + cap_sums[k2]) < champ_value
                ):
                    continue  # benched pair cannot overtake: zeros on both sides
                if not budget.spend():
                    out_of_budget = True
                    break
                candidate = _try_merge(current, k1, k2, state, weights, cache)
                if candidate is None:
                    continue
                key = _canonical(candidate.coalitions)
                if key in visited:
                    guarded = True
                    continue
                visited.add(key)
                current = candidate
                merges += 1
                applied = True
                break
            if applied or out_of_budget:
                break

        if applied:
            continue
        if out_of_budget:
            break

        for k in range(len(current.coalitions)):
            if k != serving and value_bound(cap_sums[k]) < champ_value:
                continue  # no fragment of a weak benched coalition can overtake
            for bipartition in _bipartitions(current.coalitions[k]):
                if not budget.spend():
                    out_of_budget = True
                    break
                candidate = _try_split(current, k, bipartition, state, weights, cache)
                if candidate is None:
                    continue
                key = _canonical(candidate.coalitions)
                if key in visited:
                    guarded = True
                    continue
                visited.add(key)
                current = candidate
                splits += 1
                applied = True
                break
            if applied or out_of_budget:
                break

        if applied:
            continue
        if not out_of_budget and not guarded:
            converged = True
        break

    return StabilizationReport(
        final=current,
        iterations=budget.used,
        merges_applied=merges,
        splits_applied=splits,
        converged=converged,
    )
