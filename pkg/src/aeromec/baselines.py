"""Comparison strategies: all-UAV grand coalition and noncooperative Nash.

The grand coalition is the static all-to-one service: every UAV gets an
equal slice of the task and of the pooled bandwidth, clamped to its own
caps, with no per-instance optimization.  The Nash baseline is
one-to-one service: each UAV independently best-responds with its own
share and bandwidth, internalizing its compute and hover prices (unlike
the coalition objective, which prices only communication), grabbing
from whatever task mass and bandwidth the others left in round-robin
index order.  Both produce engine Partitions so the harness can score
all strategies through one pipeline.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from .allocator import _assemble, _share_cap, min_feasible_frequency
from .engine import Partition
from .twins import MBYTE_BITS, NetworkState, WeightConfig

NASH_GRID_POINTS = 200
DEFAULT_NASH_TOL = 1e-6
DEFAULT_NASH_ROUNDS = 100


class StrategyId(enum.Enum):
    COALITION_GAME = "coalition_game"
    GRAND_COALITION = "grand_coalition"
    NASH = "nash"


@dataclass(frozen=True)
class NashReport:
    """Best-response outcome; non-convergence is reported, not raised."""

    partition: Partition
    rounds: int
    converged: bool


def grand_coalition(state: NetworkState, weights: WeightConfig) -> Partition:
    """Single all-UAV coalition with the time-invariant equal split."""
    n = state.n_uavs
    members = tuple(range(n))
    bandwidths = []
    shares = []
    for j in members:
        b = min(state.uavs[j].bandwidth_max, state.env_bandwidth / n)
        c = state.spectral_efficiency(j) * b
        cap = _share_cap(state, j, c)
        shares.append(min(state.med.task_size / n, cap))
        bandwidths.append(b)
    alloc = _assemble(members, shares, bandwidths, state, weights)
    return Partition(coalitions=(members,), allocations=(alloc,), generation=0)


def _own_utility(
    s: float,
    j: int,
    capacity: float,
    state: NetworkState,
    weights: WeightConfig,
) -> float:
    """A lone UAV's payoff from serving s bits over its link."""
    if s <= 0.0:
        return 0.0
    med = state.med
    uav = state.uavs[j]
    value = (
        weights.satisfaction * math.log1p(s / MBYTE_BITS)
        - weights.comm_penalty * med.tx_power * s / capacity
    )
    t_tr = s / capacity
    f = min_feasible_frequency(med.complexity, s, med.deadline, t_tr, uav.compute_max)
    t_cp = med.complexity * s / f
    e_cp = uav.chip_coeff * f**3 * t_cp
    hover = uav.hover_power * (t_tr + t_cp)
    return value - weights.compute_penalty * e_cp - weights.hover_penalty * hover


def _best_response(
    j: int,
    residual_s: float,
    residual_b: float,
    state: NetworkState,
    weights: WeightConfig,
) -> tuple[float, float]:
    """Own-utility maximizer over (s, b) given the leftovers.

    Own utility never decreases in b (cheaper bits, higher caps), so the
    bandwidth choice is the full residual up to b_max; the share is a
    1-D search over a dense grid with a bounded refine, compared against
    staying idle.  Idle UAVs release their bandwidth.
    """
    uav = state.uavs[j]
    b = min(uav.bandwidth_max, max(residual_b, 0.0))
    if b <= 0.0 or residual_s <= 0.0:
        return 0.0, 0.0
    capacity = state.spectral_efficiency(j) * b
    if capacity <= 0.0:
        return 0.0, 0.0
    cap = min(_share_cap(state, j, capacity), residual_s)
    if cap <= 0.0:
        return 0.0, 0.0

    def loss(s: float) -> float:
        return -_own_utility(s, j, capacity, state, weights)

    best_s = 0.0
    best_u = 0.0
    for i in range(1, NASH_GRID_POINTS + 1):
        s = cap * i / NASH_GRID_POINTS
        u = _own_utility(s, j, capacity, state, weights)
        if u > best_u:
            best_u, best_s = u, s
    if best_s > 0.0:
        lo = max(0.0, best_s - cap / NASH_GRID_POINTS)
        hi = min(cap, best_s + cap / NASH_GRID_POINTS)
        refined = minimize_scalar(loss, bounds=(lo, hi), method="bounded")
        if refined.success and -refined.fun > best_u:
            best_u, best_s = -refined.fun, float(refined.x)
    if best_s <= 0.0:
        return 0.0, 0.0
    return best_s, b


def nash_equilibrium(
    state: NetworkState,
    weights: WeightConfig,
    tol: float = DEFAULT_NASH_TOL,
    max_rounds: int = DEFAULT_NASH_ROUNDS,
) -> NashReport:
    """Round-robin best response over singletons.

    Convergence means no UAV moved its share by more than tol x task
    size nor its bandwidth by more than tol x pooled budget in a full
    round.
    """
    n = state.n_uavs
    shares = [0.0] * n
    bands = [0.0] * n
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        moved = 0.0
        for j in range(n):
            residual_s = state.med.task_size - sum(shares) + shares[j]
            residual_b = state.env_bandwidth - sum(bands) + bands[j]
            s_new, b_new = _best_response(j, residual_s, residual_b, state, weights)
            moved = max(
                moved,
                abs(s_new - shares[j]) / max(state.med.task_size, 1.0),
                abs(b_new - bands[j]) / max(state.env_bandwidth, 1.0),
            )
            shares[j], bands[j] = s_new, b_new
        if moved <= tol:
            converged = True
            break
    allocations = tuple(
        _assemble((j,), [shares[j]], [bands[j]], state, weights) for j in range(n)
    )
    partition = Partition(
        coalitions=tuple((j,) for j in range(n)),
        allocations=allocations,
        generation=0,
    )
    return NashReport(partition=partition, rounds=rounds, converged=converged)


def nash_regret(
    report: NashReport,
    state: NetworkState,
    weights: WeightConfig,
    points: int = 50,
) -> float:
    """Largest unilateral (s, b) grid improvement any UAV still has."""
    shares = [a.shares[0] for a in report.partition.allocations]
    bands = [a.bandwidths[0] for a in report.partition.allocations]
    worst = 0.0
    for j in range(state.n_uavs):
        residual_s = state.med.task_size - sum(shares) + shares[j]
        residual_b = state.env_bandwidth - sum(bands) + bands[j]
        if shares[j] > 0.0:
            base = _own_utility(
                shares[j], j, state.spectral_efficiency(j) * bands[j], state, weights
            )
        else:
            base = 0.0
        for bi in range(1, points + 1):
            b = min(state.uavs[j].bandwidth_max, residual_b) * bi / points
            capacity = state.spectral_efficiency(j) * b
            if capacity <= 0.0:
                continue
            cap = min(_share_cap(state, j, capacity), residual_s)
            for si in range(1, points + 1):
                s = cap * si / points
                worst = max(
                    worst, _own_utility(s, j, capacity, state, weights) - base
                )
    return worst
