"""Experiment configuration: JSON-editable, fully validated, default-complete.

Every knob the experiments use lives here with its default; a config file only
needs the keys it overrides. Validation happens before any run starts so a
bad file fails fast with a message naming the offending field.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

__all__ = [
    "ConfigError",
    "PopulationConfig",
    "ForecastConfig",
    "GameConfig",
    "DrlConfig",
    "ExperimentConfig",
    "load_config",
    "save_config",
]

MODES = ("fed-train", "game-solve", "drl-train", "case-study", "compare-linear", "br-sweep", "eval", "compare")


class ConfigError(ValueError):
    """A configuration value is out of its legal range."""


@dataclass(frozen=True)
class PopulationConfig:
    """Sampled game population: operators plus vehicles with parking demand."""

    n_plos: int = 3
    n_vehicles: int = 35
    duration_range: tuple[float, float] = (20.0, 100.0)  # minutes
    capability_range: tuple[float, float] = (0.5, 3.5)  # GHz, reporting only
    energy_coeff_range: tuple[float, float] = (1.0, 10.0)
    preference_range: tuple[float, float] = (0.0, 1.0)  # open interval
    revenue_range: tuple[float, float] = (3.0, 5.0)
    revenue_symmetric: float | None = None  # force every operator to this rate
    task_rate_range: tuple[float, float] = (1.0, 3.0)  # tasks per minute
    task_size_range: tuple[float, float] = (2.0, 5.0)  # giga-cycles per task
    service_period_min: float = 10.0
    reward_min: float = 0.2
    reward_max: float = 3.0
    penalty_factor: float = 2.0
    # Charge the overflow penalty per unit of the lot's demand coefficient, so
    # its strength tracks the utility scale of the sampled population.
    penalty_per_demand: bool = True


@dataclass(frozen=True)
class ForecastConfig:
    """Data source and training settings for the occupancy forecaster."""

    source: str = "synthetic"  # "synthetic" | "csv"
    csv_path: str | None = None
    lot_ids: tuple[str, ...] = ("BHMEURBRD01", "BHMEURBRD02", "Bull Ring")
    csv_columns: dict[str, str] = field(default_factory=dict)
    window: int = 15
    train_fraction: float = 0.8
    rounds: int = 50
    local_epochs: int = 1
    batch_size: int = 64
    learning_rate: float = 0.05
    hidden_size: int = 32
    head_hidden: int = 16
    synthetic_days: int = 14
    synthetic_slots_per_day: int = 19
    synthetic_noise_std: float = 0.05
    run_isolated_baseline: bool = True


@dataclass(frozen=True)
class GameConfig:
    """Analytic-solver settings."""

    learning_rate: float = 1e-3
    delta: float = 1e-2
    tol: float = 1e-4
    max_iters: int = 100_000
    mode: str = "jacobi"  # "jacobi" | "gauss-seidel"
    grid_points: int = 1000
    grid_cross_check: bool = True


@dataclass(frozen=True)
class DrlConfig:
    """Multi-agent learner settings."""

    episodes: int = 2000
    horizon: int = 20
    gamma: float = 0.95
    clip_eps: float = 0.1
    ppo_epochs: int = 4
    minibatch: int = 64
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    history_len: int = 5
    init_log_std: float = -1.0
    log_std_cap: tuple[float, float] = (-1.0, -2.8)
    log_std_cap_fraction: float = 0.6
    capacities: tuple[float, ...] | None = None  # None: unconstrained
    capacity_source: str = "fixed"  # "fixed" | "forecast"
    total_spaces: tuple[int, ...] = (50, 50, 50)  # for forecast-driven capacity
    greedy_steps: int = 30


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "game-solve"
    seed: int = 0
    out_dir: str = "runs"
    case: int = 1  # for case-study mode
    population: PopulationConfig = field(default_factory=PopulationConfig)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    game: GameConfig = field(default_factory=GameConfig)
    drl: DrlConfig = field(default_factory=DrlConfig)


def _check_range(name: str, rng: tuple[float, float], positive: bool = False) -> None:
    lo, hi = rng
    if lo > hi:
        raise ConfigError(f"{name}: min {lo} exceeds max {hi}")
    if positive and lo <= 0:
        raise ConfigError(f"{name}: values must be positive")


def validate(cfg: ExperimentConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}; choices: {MODES}")
    pop = cfg.population
    if pop.n_vehicles < 1:
        raise ConfigError("population.n_vehicles must be >= 1")
    if cfg.mode in ("game-solve", "drl-train", "case-study", "compare-linear") and pop.n_plos < 2:
        raise ConfigError("multi-leader modes need population.n_plos >= 2")
    _check_range("population.duration_range", pop.duration_range, positive=True)
    _check_range("population.capability_range", pop.capability_range, positive=True)
    _check_range("population.energy_coeff_range", pop.energy_coeff_range, positive=True)
    _check_range("population.revenue_range", pop.revenue_range, positive=True)
    _check_range("population.task_rate_range", pop.task_rate_range, positive=True)
    _check_range("population.task_size_range", pop.task_size_range, positive=True)
    if not (0.0 <= pop.preference_range[0] < pop.preference_range[1] <= 1.0):
        raise ConfigError("population.preference_range must be within [0, 1]")
    if not (0 < pop.reward_min < pop.reward_max):
        raise ConfigError("need 0 < reward_min < reward_max")
    lowest_revenue = (
        pop.revenue_symmetric
        if pop.revenue_symmetric is not None
        else pop.revenue_range[0]
    )
    if pop.reward_max > lowest_revenue:
        raise ConfigError(
            f"reward_max {pop.reward_max} exceeds the lowest possible revenue "
            f"rate {lowest_revenue}: the budget constraint would be violated"
        )
    if pop.penalty_factor < 0:
        raise ConfigError("population.penalty_factor must be >= 0")
    if pop.service_period_min <= 0:
        raise ConfigError("population.service_period_min must be positive")

    fc = cfg.forecast
    if fc.source not in ("synthetic", "csv"):
        raise ConfigError("forecast.source must be 'synthetic' or 'csv'")
    if fc.source == "csv" and not fc.csv_path:
        raise ConfigError("forecast.csv_path required when source is 'csv'")
    if not (0.0 < fc.train_fraction < 1.0):
        raise ConfigError("forecast.train_fraction must lie in (0, 1)")
    if fc.window < 1 or fc.rounds < 1 or fc.local_epochs < 1 or fc.batch_size < 1:
        raise ConfigError("forecast sizes must be >= 1")

    gm = cfg.game
    if gm.mode not in ("jacobi", "gauss-seidel"):
        raise ConfigError("game.mode must be 'jacobi' or 'gauss-seidel'")
    if gm.learning_rate <= 0 or gm.delta <= 0 or gm.tol <= 0:
        raise ConfigError("game solver parameters must be positive")
    if gm.grid_points < 100:
        raise ConfigError("game.grid_points must be >= 100")

    dr = cfg.drl
    if dr.episodes < 1 or dr.horizon < 1:
        raise ConfigError("drl.episodes and drl.horizon must be >= 1")
    if not (0.0 <= dr.gamma <= 1.0):
        raise ConfigError("drl.gamma must lie in [0, 1]")
    if dr.capacities is not None and len(dr.capacities) != pop.n_plos:
        raise ConfigError("drl.capacities length must equal population.n_plos")
    if dr.capacity_source not in ("fixed", "forecast"):
        raise ConfigError("drl.capacity_source must be 'fixed' or 'forecast'")
    if cfg.mode == "case-study" and cfg.case not in (1, 2, 3):
        raise ConfigError("case must be 1, 2 or 3")


def _from_dict(cls, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping for {cls.__name__}, got {type(data)}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for name, value in data.items():
        default = fields[name].default
        if dataclasses.is_dataclass(default.__class__) and isinstance(value, dict):
            kwargs[name] = _from_dict(default.__class__, value)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> ExperimentConfig:
    nested = {
        "population": PopulationConfig,
        "forecast": ForecastConfig,
        "game": GameConfig,
        "drl": DrlConfig,
    }
    kwargs: dict[str, Any] = {}
    unknown = set(data) - set(f.name for f in dataclasses.fields(ExperimentConfig))
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name, value in data.items():
        if name in nested:
            kwargs[name] = _from_dict(nested[name], value)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return ExperimentConfig(**kwargs)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    def convert(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {f.name: convert(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, tuple):
            return [convert(v) for v in obj]
        return obj

    return convert(cfg)


def load_config(path: str | Path) -> ExperimentConfig:
    with Path(path).open() as fh:
        data = json.load(fh)
    cfg = config_from_dict(data)
    validate(cfg)
    return cfg


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with Path(path).open("w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
