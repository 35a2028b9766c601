"""Multi-agent policy-gradient learning of operator reward policies."""
from .env import (
    AgentState,
    ClampStats,
    IncentiveEnv,
    capacity_from_forecast,
    capacity_reward,
    denormalize_action,
    fixed_capacity_schedule,
    forecast_capacity_schedule,
    normalize_action,
)
from .nets import Adam, GaussianPolicy, Mlp, ValueFunction
from .ppo import (
    PpoAgent,
    Trajectory,
    clip_factor,
    compute_returns_advantages,
    ppo_update,
    surrogate_objective,
)
from .training import (
    EpisodeRecord,
    MarlDivergenceError,
    MarlHyperparams,
    MarlResult,
    build_agents,
    greedy_rollout,
    train_marl,
)

__all__ = [
    "AgentState",
    "ClampStats",
    "IncentiveEnv",
    "capacity_from_forecast",
    "capacity_reward",
    "denormalize_action",
    "fixed_capacity_schedule",
    "forecast_capacity_schedule",
    "normalize_action",
    "Adam",
    "GaussianPolicy",
    "Mlp",
    "ValueFunction",
    "PpoAgent",
    "Trajectory",
    "clip_factor",
    "compute_returns_advantages",
    "ppo_update",
    "surrogate_objective",
    "EpisodeRecord",
    "MarlDivergenceError",
    "MarlHyperparams",
    "MarlResult",
    "build_agents",
    "greedy_rollout",
    "train_marl",
]
