"""Environment side of the learning game: actions, rewards, observations.

Operators act a normalized reward in [0, 1] that maps affinely onto their
reward interval. The per-step learning reward is the expected profit, with an
over-capacity regime: once expected arrivals exceed the lot's capacity, the
revenue share is frozen at capacity/I and a penalty proportional to the
expected overflow is charged. Each agent observes only the opponents' recent
reward history plus its own revenue rate; its own past actions never appear
in its observation.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..game import (
    PloProfile,
    VehicleProfile,
    demand_coefficients,
    pairing_probabilities,
    plo_expected_utility,
)
from ..neural import ModelWeights
from ..neural.model import forward

__all__ = [
    "ClampStats",
    "normalize_action",
    "denormalize_action",
    "capacity_reward",
    "AgentState",
    "IncentiveEnv",
    "fixed_capacity_schedule",
    "forecast_capacity_schedule",
    "capacity_from_forecast",
]

ZERO_CAPACITY_GUARD = 0.1  # stands in for n in the penalty divisor when n == 0

CapacitySchedule = Callable[[int], "np.ndarray | None"]


@dataclass
class ClampStats:
    """Counts out-of-range inputs that had to be clamped."""

    below: int = 0
    above: int = 0

    @property
    def total(self) -> int:
        return self.below + self.above


def normalize_action(
    r: float, r_min: float, r_max: float, stats: ClampStats | None = None
) -> float:
    """Map a reward in [r_min, r_max] onto [0, 1]; out-of-range input clamps."""
    if r < r_min:
        if stats is not None:
            stats.below += 1
        r = r_min
    elif r > r_max:
        if stats is not None:
            stats.above += 1
        r = r_max
    return (r - r_min) / (r_max - r_min)


def denormalize_action(
    a: float, r_min: float, r_max: float, stats: ClampStats | None = None
) -> float:
    """Inverse of :func:`normalize_action`; clamps a outside [0, 1]."""
    if a < 0.0:
        if stats is not None:
            stats.below += 1
        a = 0.0
    elif a > 1.0:
        if stats is not None:
            stats.above += 1
        a = 1.0
    return r_min + a * (r_max - r_min)


def _over_capacity_reward(
    j: int,
    rewards: np.ndarray,
    vehicles: Sequence[VehicleProfile],
    plo: PloProfile,
    capacity: float,
) -> float:
    """Capacity-capped revenue minus the overflow penalty.

    Revenue keeps the full vehicle sum but is scaled by capacity/I instead of
    the pairing probability; the penalty charges penalty_factor/capacity per
    expected vehicle beyond capacity.
    """
    n_vehicles = len(vehicles)
    rho = pairing_probabilities(rewards)[j]
    arrivals = n_vehicles * rho
    margin = plo.revenue_rate - rewards[j]
    total = 0.0
    for v in vehicles:
        coeff = v.preferences[j] * v.duration_min / (
            2.0 * v.energy_coeff * plo.workload_gcycles
        )
        total += margin * (coeff * rewards[j]) * v.duration_min
    revenue = (capacity / n_vehicles) * total
    divisor = capacity if capacity > 0 else ZERO_CAPACITY_GUARD
    penalty = (plo.penalty_factor / divisor) * max(arrivals - capacity, 0.0)
    return float(revenue - penalty)


def capacity_reward(
    j: int,
    rewards,
    vehicles: Sequence[VehicleProfile],
    plo: PloProfile,
    capacity: float | None,
) -> float:
    """Per-step learning reward of operator j under a capacity limit.

    ``capacity=None`` disables the limit entirely: the reward is then exactly
    the expected-profit function of the analytic game.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    if capacity is None:
        return plo_expected_utility(j, rewards, list(vehicles), _as_plos(plo, j, rewards))
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    arrivals = len(vehicles) * pairing_probabilities(rewards)[j]
    if arrivals <= capacity:
        return plo_expected_utility(j, rewards, list(vehicles), _as_plos(plo, j, rewards))
    return _over_capacity_reward(j, rewards, vehicles, plo, capacity)


def _as_plos(plo: PloProfile, j: int, rewards: np.ndarray) -> list[PloProfile]:
    # plo_expected_utility only touches entry j; pad the rest with the same profile
    return [plo] * rewards.shape[0]


@dataclass(frozen=True)
class AgentState:
    """Observation of one operator: opponents' recent rewards plus its revenue rate."""

    history: np.ndarray  # (history_len * (J - 1),), oldest step first
    own_revenue_rate: float

    def vector(self) -> np.ndarray:
        return np.append(self.history, self.own_revenue_rate)


class IncentiveEnv:
    """Joint environment for all operator agents.

    Keeps a finite buffer of the last ``history_len`` joint reward vectors;
    agent j's observation is built from the opponents' columns only, padded
    with their reward floors until the buffer fills.
    """

    def __init__(
        self,
        plos: Sequence[PloProfile],
        vehicles: Sequence[VehicleProfile],
        history_len: int = 5,
        capacity_schedule: CapacitySchedule | None = None,
        clamp_stats: ClampStats | None = None,
    ):
        self.plos = list(plos)
        self.vehicles = list(vehicles)
        self.history_len = history_len
        self.capacity_schedule = capacity_schedule
        self.clamp_stats = clamp_stats if clamp_stats is not None else ClampStats()
        self.n_agents = len(self.plos)
        _, self.mu = demand_coefficients(self.vehicles, self.plos)
        self.t = 0
        self._buffer: deque[np.ndarray] = deque(maxlen=history_len)

    @property
    def state_dim(self) -> int:
        return self.history_len * (self.n_agents - 1) + 1

    def reset(self) -> list[AgentState]:
        self.t = 0
        self._buffer.clear()
        floors = np.array([p.reward_min for p in self.plos])
        for _ in range(self.history_len):
            self._buffer.append(floors.copy())
        return self._states()

    def _states(self) -> list[AgentState]:
        stacked = np.stack(tuple(self._buffer))  # (L, J), oldest first
        states = []
        for j in range(self.n_agents):
            opponents = np.delete(stacked, j, axis=1).ravel()
            states.append(
                AgentState(
                    history=opponents, own_revenue_rate=self.plos[j].revenue_rate
                )
            )
        return states

    def capacities(self) -> np.ndarray | None:
        if self.capacity_schedule is None:
            return None
        return self.capacity_schedule(self.t)

    def step(
        self, joint_actions: Sequence[float]
    ) -> tuple[np.ndarray, list[AgentState], dict]:
        """Denormalize actions, pay every agent, append to the history buffer."""
        if len(joint_actions) != self.n_agents:
            raise ValueError("one action per agent required")
        rewards_r = np.array(
            [
                denormalize_action(
                    float(a), p.reward_min, p.reward_max, self.clamp_stats
                )
                for a, p in zip(joint_actions, self.plos)
            ]
        )
        caps = self.capacities()
        payoffs = np.empty(self.n_agents)
        for j, plo in enumerate(self.plos):
            cap_j = None if caps is None else float(caps[j])
            payoffs[j] = capacity_reward(j, rewards_r, self.vehicles, plo, cap_j)
        arrivals = len(self.vehicles) * pairing_probabilities(rewards_r)
        self._buffer.append(rewards_r.copy())
        self.t += 1
        info = {"rewards_r": rewards_r, "expected_arrivals": arrivals, "capacities": caps}
        return payoffs, self._states(), info


def fixed_capacity_schedule(capacities: Sequence[float] | None) -> CapacitySchedule:
    """Constant capacities every step; ``None`` means unconstrained."""
    if capacities is None:
        return lambda t: None
    caps = np.asarray(capacities, dtype=np.float64)
    return lambda t: caps


def capacity_from_forecast(
    model: ModelWeights, recent_window: np.ndarray, total_spaces: int
) -> int:
    """Free spaces implied by the occupancy forecast for the next slot."""
    pred, _ = forward(model, np.asarray(recent_window, dtype=np.float64))
    free = int(np.floor((1.0 - pred) * total_spaces))
    return int(np.clip(free, 0, total_spaces))


def forecast_capacity_schedule(
    models: Sequence[ModelWeights],
    windows_per_lot: Sequence[np.ndarray],
    total_spaces: Sequence[int],
) -> CapacitySchedule:
    """Schedule driven by per-lot forecasts over a stream of recent windows.

    ``windows_per_lot[j]`` is an array (n_steps, z); step t uses row
    ``t % n_steps``, so training can run longer than the window supply.
    """
    table = []
    for model, windows, spaces in zip(models, windows_per_lot, total_spaces):
        col = np.array(
            [capacity_from_forecast(model, w, spaces) for w in np.atleast_2d(windows)],
            dtype=np.float64,
        )
        table.append(col)
    lengths = {c.shape[0] for c in table}
    if len(lengths) != 1:
        raise ValueError("all lots must supply the same number of windows")
    matrix = np.stack(table, axis=1)  # (n_steps, J)

    def schedule(t: int) -> np.ndarray:
        return matrix[t % matrix.shape[0]]

    return schedule
