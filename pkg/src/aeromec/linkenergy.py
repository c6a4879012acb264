"""Uplink budget and coalition energy model.

Links follow free-space path loss with exponent 4 and a Shannon-capacity
uplink; serving a task costs transmission energy at the MED, computation
energy on each UAV chip and hover energy for every coalition member until
the slowest member finishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateGeometry, InvalidParameter, UnreachableUav
from .twins import MedTwin, UavTwin, distance

GAMMA_DEFAULT = 4.0


def channel_gain_sq(d: float, gamma: float = GAMMA_DEFAULT) -> float:
    """Squared channel gain |g|^2 = d^-gamma for link distance d metres."""
    if d <= 0:
        raise DegenerateGeometry(f"link distance must be > 0, got {d}")
    return d**-gamma


def capacity(b: float, gain_sq: float, p_tr: float, noise: float) -> float:
    """Shannon uplink capacity b * log2(1 + |g|^2 * p_tr / sigma^2) in bits/s."""
    if noise <= 0:
        raise InvalidParameter(f"noise power must be > 0, got {noise}")
    if b < 0:
        raise InvalidParameter(f"bandwidth must be >= 0, got {b}")
    if gain_sq < 0 or p_tr < 0:
        raise InvalidParameter("gain and transmit power must be >= 0")
    if b == 0.0:
        return 0.0
    return b * math.log2(1.0 + gain_sq * p_tr / noise)


@dataclass(frozen=True)
class LinkBudget:
    """Resolved uplink figures for one MED-UAV pair."""

    gain_sq: float
    snr: float
    capacity: float


def link_budget(
    med: MedTwin, uav: UavTwin, b: float, noise: float, gamma: float = GAMMA_DEFAULT
) -> LinkBudget:
    """Evaluate the link between a MED and a UAV at bandwidth b."""
    g = channel_gain_sq(distance(med.position, uav.position), gamma)
    snr = g * med.tx_power / noise
    return LinkBudget(gain_sq=g, snr=snr, capacity=capacity(b, g, med.tx_power, noise))


def delays(s: float, c: float, theta: float, f: float) -> tuple[float, float]:
    """Transmission and computation delay (s/c, theta*s/f) for s bits.

    A member with no data (s = 0) contributes (0, 0) regardless of its
    link or frequency.
    """
    if s < 0:
        raise InvalidParameter(f"data size must be >= 0, got {s}")
    if s == 0.0:
        return (0.0, 0.0)
    if c <= 0:
        raise UnreachableUav("cannot carry data over a zero-capacity link")
    if f <= 0:
        raise InvalidParameter("busy member needs a positive frequency")
    return (s / c, theta * s / f)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Coalition energy split by source, plus the service completion time."""

    comm: float  # J, MED transmission
    compute: float  # J, UAV chips
    hover: float  # J, all members hover until completion
    total: float
    completion_time: float  # s, max member finish time


def coalition_energy_from_capacities(
    entries: Sequence[tuple[UavTwin, float, float, float]],
    med: MedTwin,
) -> EnergyBreakdown:
    """Assemble the energy breakdown from per-member (uav, s, capacity, f).

    Computation energy uses the chip power eps*f^3 times the computation
    delay; idle members (s = 0) still hover for the full service window.
    Sums run in member order.
    """
    theta = med.complexity
    t_done = 0.0
    for _, s, c, f in entries:
        t_tr, t_cp = delays(s, c, theta, f)
        t_done = max(t_done, t_tr + t_cp)
    e_comm = 0.0
    e_comp = 0.0
    e_hover = 0.0
    for uav, s, c, f in entries:
        t_tr, t_cp = delays(s, c, theta, f)
        e_comm += med.tx_power * t_tr
        e_comp += uav.chip_coeff * f**3 * t_cp
        e_hover += uav.hover_power * t_done
    return EnergyBreakdown(
        comm=e_comm,
        compute=e_comp,
        hover=e_hover,
        total=e_comm + e_comp + e_hover,
        completion_time=t_done,
    )


def coalition_energy(
    members: Sequence[tuple[UavTwin, float, float, float]],
    med: MedTwin,
    noise: float,
    gamma: float = GAMMA_DEFAULT,
) -> EnergyBreakdown:
    """Energy breakdown for members given as (uav, s_bits, bandwidth, f)."""
    entries = []
    for uav, s, b, f in members:
        c = link_budget(med, uav, b, noise, gamma).capacity
        entries.append((uav, s, c, f))
    return coalition_energy_from_capacities(entries, med)
