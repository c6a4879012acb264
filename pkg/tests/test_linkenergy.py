"""Link budget and coalition energy model."""
import math

import pytest

from aeromec.errors import DegenerateGeometry, InvalidParameter, UnreachableUav
from aeromec.linkenergy import (
    capacity,
    channel_gain_sq,
    coalition_energy,
    coalition_energy_from_capacities,
    delays,
    link_budget,
)
from tests.test_twins import make_med, make_uav


# ----------------------------- channel ---------------------------------


def test_channel_gain_frozen_values():
    assert channel_gain_sq(10.0) == pytest.approx(1e-4, rel=1e-15)
    assert channel_gain_sq(1.0) == 1.0
    assert channel_gain_sq(800.0) == pytest.approx(2.44140625e-12, rel=1e-15)


def test_channel_gain_monotone_decreasing():
    ds = [1.0, 5.0, 50.0, 300.0, 800.0, 1500.0]
    gains = [channel_gain_sq(d) for d in ds]
    assert all(a > b for a, b in zip(gains, gains[1:]))


def test_channel_gain_rejects_zero_distance():
    with pytest.raises(DegenerateGeometry):
        channel_gain_sq(0.0)
    with pytest.raises(DegenerateGeometry):
        channel_gain_sq(-5.0)


def test_capacity_frozen_value():
    # b = 1 MHz, d = 800 m, p = 100 mW, noise = -110 dBm -> about 4.667 Mbit/s
    c = capacity(1e6, 2.44140625e-12, 0.1, 1e-14)
    assert c == pytest.approx(4667555.107041132, rel=1e-12)


def test_capacity_edge_cases():
    assert capacity(0.0, 1e-12, 0.1, 1e-14) == 0.0
    assert capacity(1e6, 1e-12, 0.0, 1e-14) == 0.0
    with pytest.raises(InvalidParameter):
        capacity(1e6, 1e-12, 0.1, 0.0)
    with pytest.raises(InvalidParameter):
        capacity(-1.0, 1e-12, 0.1, 1e-14)


def test_capacity_monotone_in_bandwidth_and_power():
    g = channel_gain_sq(800.0)
    caps_b = [capacity(b, g, 0.1, 1e-14) for b in (1e6, 2e6, 4e6)]
    assert caps_b[0] < caps_b[1] < caps_b[2]
    caps_p = [capacity(1e6, g, p, 1e-14) for p in (0.05, 0.075, 0.1)]
    assert caps_p[0] < caps_p[1] < caps_p[2]


def test_link_budget_combines_pieces():
    med = make_med()
    uav = make_uav()
    lb = link_budget(med, uav, 1e6, 1e-14)
    assert lb.gain_sq == pytest.approx(2.44140625e-12, rel=1e-15)
    assert lb.snr == pytest.approx(24.4140625, rel=1e-12)
    assert lb.capacity == pytest.approx(4667555.107041132, rel=1e-12)


# ----------------------------- delays ----------------------------------


def test_delays_frozen_values():
    t_tr, t_cp = delays(8e6, 4e6, 100.0, 4e9)
    assert t_tr == 2.0
    assert t_cp == pytest.approx(0.2, rel=1e-15)
    _, t_cp2 = delays(8e6, 4e6, 100.0, 8e8)
    assert t_cp2 == pytest.approx(1.0, rel=1e-15)


def test_delays_zero_data_is_free():
    assert delays(0.0, 0.0, 100.0, 0.0) == (0.0, 0.0)


def test_delays_rejects_zero_capacity_with_data():
    with pytest.raises(UnreachableUav):
        delays(8e6, 0.0, 100.0, 4e9)
    with pytest.raises(InvalidParameter):
        delays(8e6, 4e6, 100.0, 0.0)


# ----------------------------- energy ----------------------------------


def test_single_member_energy_frozen_values():
    med = make_med()  # p = 0.1 W, theta = 100
    uav = make_uav()  # eps = 1e-28, hover 168 W
    br = coalition_energy_from_capacities([(uav, 8e6, 4e6, 4e9)], med)
    assert br.comm == pytest.approx(0.2, rel=1e-12)
    assert br.compute == pytest.approx(1.28, rel=1e-12)
    assert br.completion_time == pytest.approx(2.2, rel=1e-12)
    assert br.hover == pytest.approx(369.6, rel=1e-12)
    assert br.total == br.comm + br.compute + br.hover


def test_idle_member_still_hovers():
    med = make_med()
    busy = make_uav()
    idle = make_uav(hover_power=100.0)
    br = coalition_energy_from_capacities(
        [(busy, 8e6, 4e6, 4e9), (idle, 0.0, 0.0, 0.0)], med
    )
    assert br.completion_time == pytest.approx(2.2, rel=1e-12)
    assert br.hover == pytest.approx((168.0 + 100.0) * 2.2, rel=1e-12)
    assert br.comm == pytest.approx(0.2, rel=1e-12)


def test_two_equal_members_halve_the_window():
    # Splitting the same task across two identical links halves each
    # transfer but keeps total transmission energy unchanged.
    med = make_med()
    uav = make_uav()
    one = coalition_energy_from_capacities([(uav, 8e6, 4e6, 4e9)], med)
    two = coalition_energy_from_capacities(
        [(uav, 4e6, 4e6, 4e9), (uav, 4e6, 4e6, 4e9)], med
    )
    assert two.comm == pytest.approx(one.comm, rel=1e-12)
    assert two.completion_time == pytest.approx(one.completion_time / 2, rel=1e-12)


def test_empty_coalition_consumes_nothing():
    med = make_med()
    br = coalition_energy_from_capacities([], med)
    assert br.total == 0.0 and br.completion_time == 0.0


def test_coalition_energy_resolves_links_from_geometry():
    med = make_med()
    uav = make_uav()
    br = coalition_energy([(uav, 8e6, 1e6, 4e9)], med, noise=1e-14)
    t_tr = 8e6 / 4667555.107041132
    assert br.comm == pytest.approx(0.1 * t_tr, rel=1e-9)


def test_total_sums_in_member_order():
    med = make_med()
    rng_sizes = [1.1e6, 2.3e6, 3.7e6]
    entries = [(make_uav(), s, 4e6, 4e9) for s in rng_sizes]
    br = coalition_energy_from_capacities(entries, med)
    comm = 0.0
    for _, s, c, _ in entries:
        comm += med.tx_power * (s / c)
    assert br.comm == comm  # identical float, same summation order
