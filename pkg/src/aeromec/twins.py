"""Digital-twin value types and the per-slot network snapshot.

All quantities are kept in SI units internally: bits, Hz, watts, seconds,
joules, cycles/s and metres.  Task and cache sizes are converted from
Mbytes at the configuration boundary (1 Mbyte = 8e6 bits).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidScenario

MBYTE_BITS = 8e6
NOISE_W_DEFAULT = 1e-14  # -110 dBm
PATH_LOSS_EXPONENT = 4.0


@dataclass(frozen=True)
class MedTwin:
    """Mobile end device: one offloadable task per slot."""

    position: tuple[float, float, float]
    task_size: float  # bits
    complexity: float  # cycles/bit
    tx_power: float  # W
    deadline: float  # s

    def __post_init__(self) -> None:
        if len(self.position) != 3:
            raise InvalidScenario("position must be an (x, y, z) triple")
        if self.task_size < 0:
            raise InvalidScenario("task_size must be >= 0")
        if self.complexity <= 0:
            raise InvalidScenario("complexity must be > 0")
        if self.tx_power < 0:
            raise InvalidScenario("tx_power must be >= 0")
        if self.deadline <= 0:
            raise InvalidScenario("deadline must be > 0")


@dataclass(frozen=True)
class UavTwin:
    """Hovering edge server: link, compute and cache capabilities."""

    position: tuple[float, float, float]
    bandwidth_max: float  # Hz
    compute_max: float  # cycles/s
    cache_max: float  # bits
    hover_power: float  # W
    chip_coeff: float  # J*s^2/cycles^3

    def __post_init__(self) -> None:
        if len(self.position) != 3:
            raise InvalidScenario("position must be an (x, y, z) triple")
        if self.bandwidth_max <= 0:
            raise InvalidScenario("bandwidth_max must be > 0")
        if self.compute_max <= 0:
            raise InvalidScenario("compute_max must be > 0")
        if self.cache_max <= 0:
            raise InvalidScenario("cache_max must be > 0")
        if self.hover_power < 0:
            raise InvalidScenario("hover_power must be >= 0")
        if self.chip_coeff <= 0:
            raise InvalidScenario("chip_coeff must be > 0")


@dataclass(frozen=True)
class WeightConfig:
    """Objective weights: log-revenue gain and the three energy prices."""

    satisfaction: float = 10.0  # phi, scales ln(1 + served Mbytes)
    comm_penalty: float = 1.0  # eps, on transmission energy
    compute_penalty: float = 0.01  # alpha, on per-UAV computation energy
    hover_penalty: float = 0.02  # beta, on per-UAV hover energy

    def __post_init__(self) -> None:
        for name in ("satisfaction", "comm_penalty", "compute_penalty", "hover_penalty"):
            if getattr(self, name) < 0:
                raise InvalidScenario(f"{name} must be >= 0")


def distance(a: tuple[float, float, float], b: tuple[float, float, float]) -> float:
    """Euclidean distance between two positions."""
    return math.dist(a, b)


@dataclass(frozen=True)
class NetworkState:
    """Per-slot scheduler input: the MED, the UAV fleet and link capacities.

    ``capacities[j]`` is UAV j's link capacity at its full bandwidth
    ``bandwidth_max``; capacity at any other bandwidth b follows by
    linearity as ``capacities[j] * b / bandwidth_max``.
    """

    slot: int
    med: MedTwin
    uavs: tuple[UavTwin, ...]
    capacities: tuple[float, ...]
    env_bandwidth: float  # Hz, shared uplink budget

    def __post_init__(self) -> None:
        if not self.uavs:
            raise InvalidScenario("at least one UAV required")
        if len(self.capacities) != len(self.uavs):
            raise InvalidScenario("one capacity entry per UAV required")
        if self.env_bandwidth <= 0:
            raise InvalidScenario("env_bandwidth must be > 0")

    @property
    def n_uavs(self) -> int:
        return len(self.uavs)

    def spectral_efficiency(self, j: int) -> float:
        """bits/s/Hz of UAV j's uplink (capacity is linear in bandwidth)."""
        return self.capacities[j] / self.uavs[j].bandwidth_max


def snapshot(
    med: MedTwin,
    uavs: tuple[UavTwin, ...] | list[UavTwin],
    env_bandwidth: float,
    slot: int = 0,
    noise: float = NOISE_W_DEFAULT,
) -> NetworkState:
    """Build the per-slot NetworkState with full-bandwidth link capacities."""
    from .linkenergy import capacity, channel_gain_sq

    caps = tuple(
        capacity(
            uav.bandwidth_max,
            channel_gain_sq(distance(med.position, uav.position)),
            med.tx_power,
            noise,
        )
        for uav in uavs
    )
    return NetworkState(
        slot=slot,
        med=med,
        uavs=tuple(uavs),
        capacities=caps,
        env_bandwidth=env_bandwidth,
    )
