"""Twin value types and the per-slot snapshot."""
import math

import pytest

from aeromec.errors import InvalidScenario
from aeromec.twins import (
    MBYTE_BITS,
    MedTwin,
    NetworkState,
    UavTwin,
    WeightConfig,
    distance,
    snapshot,
)


def make_med(**kw):
    base = dict(
        position=(0.0, 0.0, 0.0),
        task_size=8e6,
        complexity=100.0,
        tx_power=0.1,
        deadline=0.4,
    )
    base.update(kw)
    return MedTwin(**base)


def make_uav(**kw):
    base = dict(
        position=(0.0, 0.0, 800.0),
        bandwidth_max=1e6,
        compute_max=4e9,
        cache_max=2 * MBYTE_BITS,
        hover_power=168.0,
        chip_coeff=1e-28,
    )
    base.update(kw)
    return UavTwin(**base)


def test_mbyte_unit():
    assert MBYTE_BITS == 8e6


def test_med_validation():
    with pytest.raises(InvalidScenario):
        make_med(task_size=-1.0)
    with pytest.raises(InvalidScenario):
        make_med(complexity=0.0)
    with pytest.raises(InvalidScenario):
        make_med(deadline=0.0)
    with pytest.raises(InvalidScenario):
        make_med(tx_power=-0.1)


def test_uav_validation():
    with pytest.raises(InvalidScenario):
        make_uav(bandwidth_max=0.0)
    with pytest.raises(InvalidScenario):
        make_uav(compute_max=-1.0)
    with pytest.raises(InvalidScenario):
        make_uav(cache_max=0.0)
    with pytest.raises(InvalidScenario):
        make_uav(chip_coeff=0.0)


def test_weight_validation():
    with pytest.raises(InvalidScenario):
        WeightConfig(satisfaction=-1.0)
    w = WeightConfig()
    assert w.satisfaction == 10.0 and w.comm_penalty == 1.0


def test_twins_are_immutable():
    med = make_med()
    with pytest.raises(Exception):
        med.task_size = 0.0


def test_distance():
    assert distance((0.0, 0.0, 0.0), (3.0, 4.0, 0.0)) == 5.0


def test_snapshot_capacity_entries():
    med = make_med()
    uavs = tuple(make_uav(position=(float(i), 0.0, 800.0)) for i in range(5))
    state = snapshot(med, uavs, env_bandwidth=16e6, slot=3)
    assert state.n_uavs == 5
    assert len(state.capacities) == 5
    assert state.slot == 3
    # UAV straight above the MED at 800 m, 1 MHz: frozen reference value
    assert state.capacities[0] == pytest.approx(4667555.107041132, rel=1e-12)


def test_snapshot_zero_power_gives_zero_capacity():
    med = make_med(tx_power=0.0)
    state = snapshot(med, (make_uav(),), env_bandwidth=16e6)
    assert state.capacities == (0.0,)


def test_spectral_efficiency_linear_in_bandwidth():
    med = make_med()
    state = snapshot(med, (make_uav(),), env_bandwidth=16e6)
    r = state.spectral_efficiency(0)
    assert r == pytest.approx(math.log2(1.0 + 24.4140625), rel=1e-12)


def test_state_validation():
    med = make_med()
    with pytest.raises(InvalidScenario):
        NetworkState(slot=0, med=med, uavs=(), capacities=(), env_bandwidth=16e6)
    with pytest.raises(InvalidScenario):
        NetworkState(
            slot=0, med=med, uavs=(make_uav(),), capacities=(), env_bandwidth=16e6
        )
