"""Per-coalition resource allocation.

Given a coalition of UAVs serving one MED task, pick uplink shares s_j,
bandwidths b_j and chip frequencies f_j maximizing

    phi * ln(1 + sum_j s_j / Mbyte) - eps * sum_j p_tr * s_j / C_j(b_j)

subject to per-member bandwidth bounds (C1), the shared uplink budget
(C2), cache limits (C3), the task size (C4) and the deadline written as
a cap on each member's share (C8 evaluated at the member's actual
bandwidth, which implies the looser caps at full bandwidth and the
transmission-only bound C9).  Frequencies are recovered in closed form:
the cheapest f meeting the deadline, truncated at the chip capability.

The solver alternates two exact blocks:

* shares given bandwidths: costs are linear per bit with slope
  kappa_j = eps * p_tr / C_j(b_j), so the optimum fills members in
  ascending-kappa order and stops where the marginal log revenue
  phi / (Mbyte + S) falls below the next slope (or a cap binds);
* bandwidths given shares: minimize sum_j a_j / b_j with
  a_j = eps * p_tr * s_j / r_j, the classic waterfilling form; when the
  pooled budget is not binding every busy member takes full bandwidth,
  otherwise b_j = clamp(sqrt(a_j / lam), lower_j, b_max_j) with lam found
  by bisection, where lower_j keeps the current share deadline-feasible.

Both blocks are exact maximizers, so the objective never decreases.
When the pooled budget covers every bandwidth cap the first pass is
already optimal.  Under contention the joint problem is nonconvex and
the ascent only finds a local optimum, so ``solve_f3`` restarts it from
a small deterministic portfolio of bandwidth splits; see its docstring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleDeadline,
    InvalidParameter,
    OracleScaleExceeded,
)
from .linkenergy import EnergyBreakdown, coalition_energy_from_capacities
from .twins import MBYTE_BITS, NetworkState, WeightConfig

MAX_OUTER_ITERATIONS = 100
_BISECT_STEPS = 200


@dataclass(frozen=True)
class AllocationResult:
    """Solved allocation for one coalition, aligned with ``members``."""

    members: tuple[int, ...]  # UAV indices, ascending
    shares: tuple[float, ...]  # bits
    bandwidths: tuple[float, ...]  # Hz
    frequencies: tuple[float, ...]  # cycles/s
    coalition_utility: float
    participant_utilities: tuple[float, ...]
    energy: EnergyBreakdown


@dataclass(frozen=True)
class GridOracleConfig:
    """Exhaustive-search settings for solver validation."""

    points_per_axis: int = 50
    max_members: int = 3

    def __post_init__(self) -> None:
        if self.points_per_axis < 2:
            raise InvalidParameter("points_per_axis must be >= 2")
        if self.max_members < 1:
            raise InvalidParameter("max_members must be >= 1")


def min_feasible_frequency(
    theta: float, s: float, deadline: float, t_tr: float, f_max: float
) -> float:
    """Cheapest chip frequency meeting the deadline, truncated at f_max.

    Energy grows as f^2 for fixed work, so the cheapest feasible
    frequency is the slowest one: theta*s / (deadline - t_tr).
    """
    if min(theta, s, deadline, f_max) < 0 or t_tr < 0:
        raise InvalidParameter("negative frequency-recovery input")
    if s == 0.0:
        return 0.0
    if t_tr >= deadline:
        raise InfeasibleDeadline(
            f"transmission {t_tr:.6g}s already exceeds deadline {deadline:.6g}s"
        )
    return min(theta * s / (deadline - t_tr), f_max)


def _validate_coalition(coalition, state: NetworkState) -> tuple[int, ...]:
    members = tuple(sorted(coalition))
    if not members:
        raise InvalidParameter("coalition must be non-empty")
    if len(set(members)) != len(members):
        raise InvalidParameter("duplicate UAV index in coalition")
    if members[0] < 0 or members[-1] >= state.n_uavs:
        raise InvalidParameter("coalition index out of range")
    return members


def _share_cap(state: NetworkState, j: int, c: float) -> float:
    """Largest deadline- and cache-feasible share for UAV j at capacity c."""
    if c <= 0.0:
        return 0.0
    uav = state.uavs[j]
    med = state.med
    return min(uav.cache_max, med.deadline / (1.0 / c + med.complexity / uav.compute_max))


def coalition_objective(
    shares,
    bandwidths,
    coalition,
    state: NetworkState,
    weights: WeightConfig,
) -> float:
    """Coalition value: log revenue on served Mbytes minus weighted
    transmission energy.  Members with data but zero capacity make the
    value -inf (infeasible point)."""
    members = _validate_coalition(coalition, state)
    if not len(shares) == len(bandwidths) == len(members):
        raise InvalidParameter("shares/bandwidths must align with the coalition")
    p = state.med.tx_power
    served = sum(shares)
    cost = 0.0
    for j, s, b in zip(members, shares, bandwidths):
        if s == 0.0:
            continue
        c = state.spectral_efficiency(j) * b
        if c <= 0.0:
            return -math.inf
        cost += p * s / c
    return weights.satisfaction * math.log(1.0 + served / MBYTE_BITS) - weights.comm_penalty * cost


def _fill_shares(
    caps: list[float], kappas: list[float], s_total: float, phi: float
) -> list[float]:
    """Exact share block: greedy fill in ascending marginal-cost order."""
    k = len(caps)
    shares = [0.0] * k
    if phi == 0.0 or s_total <= 0.0:
        return shares
    order = sorted(range(k), key=lambda i: (kappas[i], i))
    served = 0.0
    remaining = s_total
    for i in order:
        if remaining <= 0.0:
            break
        if caps[i] <= 0.0 or math.isinf(kappas[i]):
            continue
        if kappas[i] > 0.0:
            # marginal revenue phi/(Mbyte + served) crosses the slope here
            stop = phi / kappas[i] - MBYTE_BITS - served
            if stop <= 0.0:
                break
            take = min(caps[i], remaining, stop)
        else:
            take = min(caps[i], remaining)
        if take > 0.0:
            shares[i] = take
            served += take
            remaining -= take
    return shares


def _fit_bandwidths(
    shares: list[float],
    rates: list[float],
    b_max: list[float],
    budget: float,
    state: NetworkState,
    members: tuple[int, ...],
    p: float,
) -> list[float]:
    """Exact bandwidth block: waterfilling with deadline lower bounds."""
    busy = [i for i, s in enumerate(shares) if s > 0.0]
    b = [0.0] * len(shares)
    if not busy:
        return b
    if sum(b_max[i] for i in busy) <= budget:
        for i in busy:
            b[i] = b_max[i]
        return b
    med = state.med
    lower = {}
    weight = {}
    for i in busy:
        uav = state.uavs[members[i]]
        slack = med.deadline - med.complexity * shares[i] / uav.compute_max
        lower[i] = shares[i] / (rates[i] * slack)
        weight[i] = p * shares[i] / rates[i]

    def filled(lam: float) -> float:
        total = 0.0
        for i in busy:
            bi = math.sqrt(weight[i] / lam)
            total += min(max(bi, lower[i]), b_max[i])
        return total

    lo, hi = 1e-30, 1e30
    for _ in range(_BISECT_STEPS):
        mid = math.sqrt(lo * hi)
        if filled(mid) > budget:
            lo = mid
        else:
            hi = mid
    lam = hi
    for i in busy:
        b[i] = min(max(math.sqrt(weight[i] / lam), lower[i]), b_max[i])
    total = sum(b)
    if total > budget:  # bisection residue, a few ulps at most
        scale = budget / total
        for i in busy:
            b[i] *= scale
    return b


def solve_f3(
    coalition,
    state: NetworkState,
    weights: WeightConfig,
    tol: float = 1e-6,
) -> AllocationResult:
    """Solve the per-coalition allocation by two-block coordinate ascent.

    When the pooled budget covers every member bandwidth cap the single
    pass at full bandwidth is exact.  Under contention the joint problem
    is nonconvex, so the ascent runs from a small deterministic portfolio
    of bandwidth starts and keeps the best converged point: a uniform
    scale-down, a waterfill for the full-bandwidth wish-list shares, and
    a cap-following waterline that is the exact optimizer whenever every
    busy share sits at its deadline cap.  A backward support-elimination
    pass then retracts links whose service costs more than it earns.
    The result is always feasible; under heavy contention it is a
    best-of-portfolio local optimum rather than a certified global one.
    """
    members = _validate_coalition(coalition, state)
    med = state.med
    rates = [state.spectral_efficiency(j) for j in members]
    b_max = [state.uavs[j].bandwidth_max for j in members]
    budget = state.env_bandwidth

    if sum(b_max) <= budget:
        obj, shares, b = _ascend(members, state, weights, rates, b_max, list(b_max), tol)
        return _assemble(members, shares, b, state, weights)

    scale = budget / sum(b_max)
    starts = [
        [bm * scale for bm in b_max],
        _wishlist_start(members, state, weights, rates, b_max),
        _waterline_start(members, state, weights, rates, b_max),
    ]
    best: tuple[float, list[float], list[float]] | None = None
    for b0 in starts:
        out = _ascend(members, state, weights, rates, b_max, b0, tol)
        if best is None or out[0] > best[0]:
            best = out
    # backward support elimination: when the task constraint binds, the
    # optimum may exclude expensive links outright, which the ascent
    # cannot discover because granted bandwidth is never retracted; drop
    # the costliest serving member while that improves the objective
    support = set(range(len(members)))
    while len(support) > 1:
        busy = [i for i in support if best[1][i] > 0.0]
        if len(busy) <= 1:
            break
        drop = max(
            busy,
            key=lambda i: med.tx_power / (rates[i] * best[2][i])
            if best[2][i] > 0.0
            else math.inf,
        )
        trial = support - {drop}
        b0 = _waterline_start(members, state, weights, rates, b_max, trial)
        out = _ascend(members, state, weights, rates, b_max, b0, tol)
        if out[0] <= best[0] + tol * max(1.0, abs(best[0])):
            break
        best = out
        support = trial
    return _assemble(members, best[1], best[2], state, weights)


def _ascend(
    members, state, weights, rates, b_max, b0, tol
) -> tuple[float, list[float], list[float]]:
    """Alternate exact share and bandwidth blocks from bandwidth start b0."""
    med = state.med
    budget = state.env_bandwidth
    p = med.tx_power
    b = list(b0)
    prev = -math.inf
    top = (-math.inf, [0.0] * len(b), b)
    for _ in range(MAX_OUTER_ITERATIONS):
        caps = [_share_cap(state, j, r * bi) for j, r, bi in zip(members, rates, b)]
        kappas = [
            weights.comm_penalty * p / (r * bi) if r * bi > 0.0 else math.inf
            for r, bi in zip(rates, b)
        ]
        shares = _fill_shares(caps, kappas, med.task_size, weights.satisfaction)
        b = _fit_bandwidths(shares, rates, b_max, budget, state, members, p)
        obj = coalition_objective(shares, b, members, state, weights)
        if obj > top[0]:
            top = (obj, shares, b)
        if obj - prev <= tol * max(1.0, abs(prev)):
            break
        prev = obj
    return top


def _wishlist_start(members, state, weights, rates, b_max) -> list[float]:
    """Waterfill the budget for the full-bandwidth wish-list shares."""
    med = state.med
    caps = [_share_cap(state, j, state.capacities[j]) for j in members]
    kappas = [
        weights.comm_penalty * med.tx_power / state.capacities[j]
        if state.capacities[j] > 0.0
        else math.inf
        for j in members
    ]
    wish = _fill_shares(caps, kappas, med.task_size, weights.satisfaction)
    busy = [i for i, s in enumerate(wish) if s > 0.0]
    if not busy:
        scale = state.env_bandwidth / sum(b_max)
        return [bm * scale for bm in b_max]
    weight = {i: med.tx_power * wish[i] / rates[i] for i in busy}
    budget = state.env_bandwidth
    lo, hi = 1e-30, 1e30
    for _ in range(_BISECT_STEPS):
        mid = math.sqrt(lo * hi)
        total = sum(min(math.sqrt(weight[i] / mid), b_max[i]) for i in busy)
        if total > budget:
            lo = mid
        else:
            hi = mid
    b = [0.0] * len(members)
    for i in busy:
        b[i] = min(math.sqrt(weight[i] / hi), b_max[i])
    return b


def _waterline_start(
    members, state, weights, rates, b_max, support=None
) -> list[float]:
    """Bandwidth split maximizing the objective on the shares-at-cap
    manifold, where it is concave with a closed-form per-member
    waterline: the marginal value of bandwidth is
    tau*r*f*(nu*f + eps*p*theta) / (f + theta*r*b)^2 below the cache
    knee and eps*p*cache/(r*b^2) above it (nu is the log slope,
    resolved by a short fixed-point loop).  Members outside `support`
    get zero bandwidth."""
    med = state.med
    theta = med.complexity
    tau = med.deadline
    p = med.tx_power
    eps = weights.comm_penalty
    budget = state.env_bandwidth
    if support is None:
        support = range(len(members))
    support = set(support)
    nu = weights.satisfaction / MBYTE_BITS  # log slope at zero served

    # hoist per-member constants; inactive or dead links stay at zero
    active = []
    for i, j in enumerate(members):
        r = rates[i]
        if r <= 0.0 or i not in support:
            continue
        uav = state.uavs[j]
        f = uav.compute_max
        cache = uav.cache_max
        # cache knee: smallest b with m(b) = cache (if reachable)
        knee = (
            cache * f / (r * (tau * f - theta * cache))
            if tau * f > theta * cache
            else math.inf
        )
        active.append((i, r, f, 1.0 / (theta * r), knee, eps * p * cache / r, b_max[i]))

    def fill(g: float, a_coeffs: list[float]) -> list[float]:
        b = [0.0] * len(members)
        for (i, r, f, inv_tr, knee, c2, bm), a in zip(active, a_coeffs):
            # hyperbolic branch: m(b) = tau*r*b*f/(f + theta*r*b)
            b_h = (math.sqrt(a / g) - f) * inv_tr
            if b_h > knee:
                b_h = max(knee, math.sqrt(c2 / g))
            b[i] = min(max(b_h, 0.0), bm)
        return b

    b = [0.0] * len(members)
    for _ in range(8):  # nu fixed point, early exit on stall
        a_coeffs = [
            tau * r * f * (nu * f + eps * p * theta) for _, r, f, *_ in active
        ]
        lo, hi = 1e-30, 1e30
        while hi > lo * (1.0 + 1e-12):
            g = math.sqrt(lo * hi)
            if sum(fill(g, a_coeffs)) > budget:
                lo = g
            else:
                hi = g
        b = fill(hi, a_coeffs)
        served = sum(
            min(_share_cap(state, j, r * bi), med.task_size)
            for j, r, bi in zip(members, rates, b)
        )
        new_nu = weights.satisfaction / (MBYTE_BITS + min(served, med.task_size))
        done = abs(new_nu - nu) <= 1e-12 * nu
        nu = new_nu
        if done:
            break
    return b


def _assemble(
    members: tuple[int, ...],
    shares: list[float],
    bandwidths: list[float],
    state: NetworkState,
    weights: WeightConfig,
) -> AllocationResult:
    """Recover frequencies, energy and utilities for a feasible (s, b)."""
    med = state.med
    theta = med.complexity
    entries = []
    freqs = []
    for i, j in enumerate(members):
        uav = state.uavs[j]
        c = state.spectral_efficiency(j) * bandwidths[i]
        s = shares[i]
        if s > 0.0:
            f = min_feasible_frequency(theta, s, med.deadline, s / c, uav.compute_max)
        else:
            f = 0.0
        freqs.append(f)
        entries.append((uav, s, c, f))
    energy = coalition_energy_from_capacities(entries, med)
    value = coalition_objective(shares, bandwidths, members, state, weights)
    utils = _split_value(members, shares, freqs, energy, state, weights, value)
    return AllocationResult(
        members=members,
        shares=tuple(shares),
        bandwidths=tuple(bandwidths),
        frequencies=tuple(freqs),
        coalition_utility=value,
        participant_utilities=utils,
        energy=energy,
    )


def _split_value(
    members, shares, freqs, energy, state, weights, value
) -> tuple[float, ...]:
    served = sum(shares)
    theta = state.med.complexity
    utils = []
    for i, j in enumerate(members):
        uav = state.uavs[j]
        if served <= 0.0:
            utils.append(0.0)
            continue
        revenue = value * shares[i] / served
        t_cp = theta * shares[i] / freqs[i] if shares[i] > 0.0 else 0.0
        e_cp = uav.chip_coeff * freqs[i] ** 3 * t_cp
        e_h = uav.hover_power * energy.completion_time
        utils.append(
            revenue - weights.compute_penalty * e_cp - weights.hover_penalty * e_h
        )
    return tuple(utils)


def participant_utility(
    j: int,
    allocation: AllocationResult,
    state: NetworkState,
    weights: WeightConfig,
) -> float:
    """Member j's take: proportional share of the coalition value minus
    its own computation and hover energy prices (zero in an idle
    coalition, where nobody serves and nobody hovers)."""
    if j not in allocation.members:
        raise InvalidParameter(f"UAV {j} is not in this coalition")
    i = allocation.members.index(j)
    return _split_value(
        allocation.members,
        allocation.shares,
        allocation.frequencies,
        allocation.energy,
        state,
        weights,
        allocation.coalition_utility,
    )[i]


def assert_allocation_feasible(
    state: NetworkState,
    allocation: AllocationResult,
    tol: float = 1e-9,
) -> None:
    """Raise AssertionError if any constraint residual exceeds tol."""
    med = state.med
    members = allocation.members
    for i, j in enumerate(members):
        uav = state.uavs[j]
        s, b, f = allocation.shares[i], allocation.bandwidths[i], allocation.frequencies[i]
        assert -tol <= b <= uav.bandwidth_max + tol, "bandwidth bound (C1)"
        assert -tol <= s <= uav.cache_max + tol, "cache bound (C3)"
        assert f <= uav.compute_max + tol, "frequency capability (C7)"
        c_full = state.capacities[j]
        if c_full > 0.0:
            assert s <= med.deadline * c_full + tol, "transmission-only bound (C9)"
            cap_full = _share_cap(state, j, c_full)
            assert s <= cap_full + tol, "deadline share cap at full bandwidth (C8)"
        else:
            assert s <= tol, "no data over a dead link"
        if s > 0.0:
            c = state.spectral_efficiency(j) * b
            assert c > 0.0, "busy member needs capacity"
            done = s / c + med.complexity * s / f
            assert done <= med.deadline + tol, "completion deadline (C6)"
    assert sum(allocation.bandwidths) <= state.env_bandwidth + tol, "uplink budget (C2)"
    assert sum(allocation.shares) <= med.task_size + tol, "task size (C4)"


def grid_gap_bound(
    coalition, state: NetworkState, weights: WeightConfig, points_per_axis: int
) -> float:
    """Worst-case objective loss from snapping the true optimum onto the
    share grid: one grid step per member, priced at the steepest log
    slope phi/Mbyte (the linear cost term only shrinks when snapping
    down)."""
    members = _validate_coalition(coalition, state)
    caps = [_share_cap(state, j, state.capacities[j]) for j in members]
    step_sum = sum(caps) / (points_per_axis - 1)
    return weights.satisfaction * step_sum / MBYTE_BITS


def grid_oracle(
    coalition,
    state: NetworkState,
    weights: WeightConfig,
    config: GridOracleConfig | None = None,
) -> float:
    """Best objective over an exhaustive feasible grid (validation only).

    When the pooled budget cannot bind (sum of member bandwidth caps
    within env_bandwidth), full bandwidth dominates every smaller choice
    (capacity rises, per-bit cost and share caps improve), so only the
    shares are gridded.  Otherwise bandwidth axes are enumerated too,
    which is tractable for at most two members.
    """
    cfg = config or GridOracleConfig()
    members = _validate_coalition(coalition, state)
    if len(members) > cfg.max_members:
        raise OracleScaleExceeded(
            f"{len(members)} members exceeds the {cfg.max_members}-member oracle cap"
        )
    p_axis = cfg.points_per_axis
    med = state.med
    p = med.tx_power
    phi = weights.satisfaction
    eps = weights.comm_penalty

    b_max = [state.uavs[j].bandwidth_max for j in members]
    if sum(b_max) <= state.env_bandwidth:
        axes = []
        kappas = []
        for j in members:
            c = state.capacities[j]
            cap = _share_cap(state, j, c)
            axes.append(np.linspace(0.0, cap, p_axis) if cap > 0.0 else np.zeros(1))
            kappas.append(eps * p / c if c > 0.0 else 0.0)
        grids = np.meshgrid(*axes, indexing="ij", sparse=True)
        served = sum(grids)
        cost = sum(kap * g for kap, g in zip(kappas, grids))
        value = phi * np.log1p(served / MBYTE_BITS) - cost
        value = np.where(served <= med.task_size * (1 + 1e-12), value, -np.inf)
        return float(value.max())

    if len(members) > 2:
        raise OracleScaleExceeded(
            "bandwidth-contended oracle limited to 2 members"
        )
    return _contended_oracle(members, state, weights, p_axis)


def _contended_oracle(
    members: tuple[int, ...],
    state: NetworkState,
    weights: WeightConfig,
    p_axis: int,
) -> float:
    """Joint (s, b) grid search under a binding bandwidth budget."""
    med = state.med
    p = med.tx_power
    phi, eps = weights.satisfaction, weights.comm_penalty
    rates = [state.spectral_efficiency(j) for j in members]
    b_axes = [np.linspace(0.0, state.uavs[j].bandwidth_max, p_axis) for j in members]
    s_axes = []
    for j in members:
        cap = _share_cap(state, j, state.capacities[j])
        s_axes.append(np.linspace(0.0, cap, p_axis) if cap > 0.0 else np.zeros(1))

    def column(i: int, c: float) -> tuple[np.ndarray, np.ndarray]:
        """Feasible-masked shares and per-share cost at capacity c."""
        s = s_axes[i]
        cap = _share_cap(state, members[i], c)
        ok = s <= cap * (1 + 1e-12)
        cost = np.where(s > 0.0, eps * p * s / c if c > 0.0 else np.inf, 0.0)
        return np.where(ok, s, np.nan), np.where(ok, cost, np.inf)

    best = 0.0
    if len(members) == 1:
        for b0 in b_axes[0]:
            s0, cost0 = column(0, rates[0] * b0)
            served = s0
            value = phi * np.log1p(served / MBYTE_BITS) - cost0
            value = np.where(served <= med.task_size * (1 + 1e-12), value, -np.inf)
            best = max(best, float(np.nanmax(value)))
        return best

    for b0 in b_axes[0]:
        remaining = state.env_bandwidth - b0
        s0, cost0 = column(0, rates[0] * b0)
        for b1 in b_axes[1]:
            if b1 > remaining * (1 + 1e-12):
                break
            s1, cost1 = column(1, rates[1] * b1)
            served = s0[:, None] + s1[None, :]
            value = (
                phi * np.log1p(served / MBYTE_BITS)
                - cost0[:, None]
                - cost1[None, :]
            )
            value = np.where(served <= med.task_size * (1 + 1e-12), value, -np.inf)
            vmax = np.nanmax(value)
            if vmax > best:
                best = float(vmax)
    return best
