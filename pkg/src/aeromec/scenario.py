"""Random scenario generation and run configuration.

A scenario is a fleet of UAV twins hovering at fixed altitude over a
square service area plus one ground MED whose position and task are
redrawn every slot.  The fleet is sampled once per run so that slot
metrics from the same seed describe the same network.

Configuration files use field-friendly units (Mbytes, ms, dBm, GHz);
everything is converted to SI on load.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .baselines import StrategyId
from .errors import InvalidScenario, IoFailure
from .twins import MBYTE_BITS, MedTwin, NetworkState, UavTwin, WeightConfig, snapshot
from .warmstart import WarmStartProvider

CHIP_COEFF_BASE = 1e-28  # J*s^2/cycles^3, multiplied by the sampled factor


def _check_range(name: str, rng: tuple[float, float], positive: bool = True) -> None:
    if len(rng) != 2:
        raise InvalidScenario(f"{name} must be a (low, high) pair")
    lo, hi = rng
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise InvalidScenario(f"{name} must be finite")
    if lo > hi:
        raise InvalidScenario(f"{name} low bound {lo} exceeds high bound {hi}")
    if positive and lo <= 0:
        raise InvalidScenario(f"{name} must be > 0, got low bound {lo}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Run-level knobs: fleet size, sampling ranges, strategy and fidelity.

    Ranges are inclusive (low, high) pairs fed to a uniform sampler.
    """

    n_uavs: int = 10
    n_slots: int = 100
    slot_duration: float = 60.0  # s
    area_side: float = 1000.0  # m
    uav_altitude: float = 800.0  # m
    task_size_mbyte: tuple[float, float] = (5.0, 25.0)
    complexity: tuple[float, float] = (50.0, 300.0)  # cycles/bit
    tx_power: tuple[float, float] = (0.05, 0.1)  # W
    bandwidth: tuple[float, float] = (1e6, 5e6)  # Hz, per-UAV uplink cap
    cache: tuple[float, float] = (1.0, 2.0)  # Mbyte
    deadline_ms: tuple[float, float] = (150.0, 500.0)
    chip_coeff_multiplier: tuple[float, float] = (1.0, 2.5)  # x 1e-28
    compute_ghz: tuple[float, float] = (4.0, 10.0)
    hover_power: float = 168.0  # W, fleet-wide
    env_bandwidth: float = 16e6  # Hz, shared uplink budget
    noise_dbm: float = -110.0
    weights: WeightConfig = field(default_factory=WeightConfig)
    seed: int = 0
    strategy: StrategyId = StrategyId.COALITION_GAME
    warm_start: WarmStartProvider = field(
        default_factory=lambda: WarmStartProvider("cold")
    )
    fidelity_delta: float = 0.0

    def __post_init__(self) -> None:
        if self.n_uavs < 1:
            raise InvalidScenario("n_uavs must be >= 1")
        if self.n_slots < 1:
            raise InvalidScenario("n_slots must be >= 1")
        if self.slot_duration <= 0:
            raise InvalidScenario("slot_duration must be > 0")
        if self.area_side <= 0:
            raise InvalidScenario("area_side must be > 0")
        if self.uav_altitude <= 0:
            raise InvalidScenario("uav_altitude must be > 0")
        for name in (
            "task_size_mbyte",
            "complexity",
            "tx_power",
            "bandwidth",
            "cache",
            "deadline_ms",
            "chip_coeff_multiplier",
            "compute_ghz",
        ):
            _check_range(name, getattr(self, name))
        if self.hover_power < 0:
            raise InvalidScenario("hover_power must be >= 0")
        if self.env_bandwidth <= 0:
            raise InvalidScenario("env_bandwidth must be > 0")
        if self.fidelity_delta <= -1.0:
            raise InvalidScenario("fidelity_delta must be > -1")

    @property
    def noise_w(self) -> float:
        """Noise power in watts from the configured dBm figure."""
        return 10.0 ** (self.noise_dbm / 10.0) / 1000.0


def _pair(value) -> tuple[float, float]:
    try:
        lo, hi = value
    except (TypeError, ValueError) as exc:
        raise InvalidScenario(f"expected a (low, high) pair, got {value!r}") from exc
    return (float(lo), float(hi))


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a plain JSON-style dict."""
    if not isinstance(raw, dict):
        raise InvalidScenario("configuration must be a JSON object")
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(raw) - known
    if unknown:
        raise InvalidScenario(f"unknown configuration keys: {sorted(unknown)}")
    kwargs: dict = {}
    for key, value in raw.items():
        if key in (
            "task_size_mbyte",
            "complexity",
            "tx_power",
            "bandwidth",
            "cache",
            "deadline_ms",
            "chip_coeff_multiplier",
            "compute_ghz",
        ):
            kwargs[key] = _pair(value)
        elif key == "weights":
            kwargs[key] = WeightConfig(**value)
        elif key == "strategy":
            kwargs[key] = StrategyId(value)
        elif key == "warm_start":
            kwargs[key] = WarmStartProvider(**value)
        elif key in ("n_uavs", "n_slots", "seed"):
            kwargs[key] = int(value)
        else:
            kwargs[key] = float(value)
    try:
        return ScenarioConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InvalidScenario(f"bad configuration: {exc}") from exc


def config_to_dict(config: ScenarioConfig) -> dict:
    """Serialize a ScenarioConfig back to a JSON-style dict."""
    out = dataclasses.asdict(config)
    out["weights"] = dataclasses.asdict(config.weights)
    out["strategy"] = config.strategy.value
    out["warm_start"] = dataclasses.asdict(config.warm_start)
    for key, value in list(out.items()):
        if isinstance(value, tuple):
            out[key] = list(value)
    return out


def load_config(path: str) -> ScenarioConfig:
    """Read a JSON configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidScenario(f"configuration {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def sample_fleet(config: ScenarioConfig, rng: np.random.Generator) -> tuple[UavTwin, ...]:
    """Draw the per-run UAV fleet: positions and capabilities."""
    uavs = []
    for _ in range(config.n_uavs):
        x = rng.uniform(0.0, config.area_side)
        y = rng.uniform(0.0, config.area_side)
        uavs.append(
            UavTwin(
                position=(x, y, config.uav_altitude),
                bandwidth_max=rng.uniform(*config.bandwidth),
                compute_max=rng.uniform(*config.compute_ghz) * 1e9,
                cache_max=rng.uniform(*config.cache) * MBYTE_BITS,
                hover_power=config.hover_power,
                chip_coeff=rng.uniform(*config.chip_coeff_multiplier) * CHIP_COEFF_BASE,
            )
        )
    return tuple(uavs)


def sample_med(config: ScenarioConfig, rng: np.random.Generator) -> MedTwin:
    """Draw one slot's ground device and its task."""
    x = rng.uniform(0.0, config.area_side)
    y = rng.uniform(0.0, config.area_side)
    return MedTwin(
        position=(x, y, 0.0),
        task_size=rng.uniform(*config.task_size_mbyte) * MBYTE_BITS,
        complexity=rng.uniform(*config.complexity),
        tx_power=rng.uniform(*config.tx_power),
        deadline=rng.uniform(*config.deadline_ms) / 1e3,
    )


def generate_scenario(config: ScenarioConfig) -> list[NetworkState]:
    """Sample the fleet once, then one network snapshot per slot."""
    rng = np.random.default_rng(config.seed)
    fleet = sample_fleet(config, rng)
    return [
        snapshot(
            med=sample_med(config, rng),
            uavs=fleet,
            env_bandwidth=config.env_bandwidth,
            slot=slot,
            noise=config.noise_w,
        )
        for slot in range(config.n_slots)
    ]
