"""Configuration, presets, experiment runners and the CLI."""
from .config import (
    ConfigError,
    DrlConfig,
    ExperimentConfig,
    ForecastConfig,
    GameConfig,
    PopulationConfig,
    load_config,
    save_config,
    validate,
)
from .experiments import (
    RunArtifact,
    build_datasets,
    compare_linear_pricing,
    run_best_response_sweep,
    run_case_study,
    run_drl_train,
    run_fed_train,
    run_game_solve,
)
from .presets import CAPACITY_CASES, expected_workload, preset_population

__all__ = [
    "ConfigError",
    "DrlConfig",
    "ExperimentConfig",
    "ForecastConfig",
    "GameConfig",
    "PopulationConfig",
    "load_config",
    "save_config",
    "validate",
    "RunArtifact",
    "build_datasets",
    "compare_linear_pricing",
    "run_best_response_sweep",
    "run_case_study",
    "run_drl_train",
    "run_fed_train",
    "run_game_solve",
    "CAPACITY_CASES",
    "expected_workload",
    "preset_population",
]
