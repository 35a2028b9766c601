"""Decentralized training loop: every operator learns its own policy.

Per episode the agents act simultaneously for a fixed horizon, each sees only
opponents' past strategies, and each runs its own clipped-surrogate update on
the collected trajectory. No parameters are shared between agents. All
randomness flows from per-agent seeded generators, so reruns with the same
configuration reproduce every number.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..game import PloProfile, VehicleProfile
from .env import CapacitySchedule, IncentiveEnv
from .nets import Adam, GaussianPolicy, ValueFunction
from .ppo import PpoAgent, Trajectory, compute_returns_advantages, ppo_update

__all__ = [
    "MarlHyperparams",
    "EpisodeRecord",
    "MarlResult",
    "MarlDivergenceError",
    "build_agents",
    "train_marl",
    "greedy_rollout",
]

_AGENT_SEED_STRIDE = 7_919


class MarlDivergenceError(RuntimeError):
    """A parameter became non-finite during training."""

    def __init__(self, episode: int, agent: int):
        super().__init__(f"non-finite parameters in agent {agent} at episode {episode}")
        self.episode = episode
        self.agent = agent


@dataclass(frozen=True)
class MarlHyperparams:
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
    log_std_bounds: tuple[float, float] = (-5.0, 1.0)
    # Exploration anneal: the learned log-std is additionally capped, with the
    # cap sliding from the first value to the second over this fraction of
    # training. A wide clamped Gaussian otherwise rewards a saturated mean
    # (the clamp eats the upper tail), which pins the sigmoid squash.
    log_std_cap: tuple[float, float] = (-1.0, -2.8)
    log_std_cap_fraction: float = 0.6
    actor_hidden: tuple[int, ...] = (200, 50)
    critic_hidden: tuple[int, ...] = (128, 64)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    agent: int
    mean_reward: float
    mean_r: float
    expected_arrivals: float


@dataclass
class MarlResult:
    agents: list[PpoAgent]
    curves: list[EpisodeRecord]
    env: IncentiveEnv
    hyperparams: MarlHyperparams
    greedy_rewards: np.ndarray = field(default_factory=lambda: np.empty(0))


def _state_scaling(
    plos: list[PloProfile], history_len: int
) -> tuple[np.ndarray, np.ndarray]:
    """Affine input scaling so reward history and revenue rate are O(1)."""
    J = len(plos)
    offsets = []
    scales = []
    for j in range(J):
        opp = [p for k, p in enumerate(plos) if k != j]
        off = np.tile([p.reward_min for p in opp], history_len)
        sc = np.tile([p.reward_max - p.reward_min for p in opp], history_len)
        offsets.append(np.append(off, 0.0))
        scales.append(np.append(sc, max(p.revenue_rate for p in plos)))
    return np.stack(offsets), np.stack(scales)


def build_agents(
    plos: list[PloProfile], hp: MarlHyperparams, state_dim: int
) -> list[PpoAgent]:
    offsets, scales = _state_scaling(plos, hp.history_len)
    agents = []
    for j in range(len(plos)):
        init_rng = np.random.default_rng(hp.seed * _AGENT_SEED_STRIDE + 2 * j)
        policy = GaussianPolicy(
            state_dim,
            init_rng,
            hidden=hp.actor_hidden,
            init_log_std=hp.init_log_std,
            log_std_bounds=hp.log_std_bounds,
            state_offset=offsets[j],
            state_scale=scales[j],
        )
        # critic also sees the remaining-steps fraction (already in [0, 1])
        value_fn = ValueFunction(
            state_dim + 1,
            init_rng,
            hidden=hp.critic_hidden,
            state_offset=np.append(offsets[j], 0.0),
            state_scale=np.append(scales[j], 1.0),
        )
        agents.append(
            PpoAgent(
                index=j,
                policy=policy,
                value_fn=value_fn,
                actor_opt=Adam(policy.param_arrays(), hp.actor_lr),
                critic_opt=Adam(value_fn.param_arrays(), hp.critic_lr),
                rng=np.random.default_rng(hp.seed * _AGENT_SEED_STRIDE + 2 * j + 1),
            )
        )
    return agents


def _check_finite(agent: PpoAgent, episode: int) -> None:
    for arr in agent.policy.param_arrays() + agent.value_fn.param_arrays():
        if not np.all(np.isfinite(arr)):
            raise MarlDivergenceError(episode, agent.index)


def _reward_scales(
    plos: list[PloProfile], vehicles: list[VehicleProfile]
) -> np.ndarray:
    """Per-agent payoff magnitude at the midpoint strategies.

    Learning runs on rewards divided by this, so returns are O(10) regardless
    of the vehicle population's demand scale; reported curves keep raw values.
    """
    from ..game import demand_coefficients, plo_expected_utility_reduced

    _, mu = demand_coefficients(vehicles, plos)
    mid = np.array([(p.reward_min + p.reward_max) / 2.0 for p in plos])
    return np.array(
        [
            max(abs(plo_expected_utility_reduced(j, mid, mu, plos)), 1e-9)
            for j in range(len(plos))
        ]
    )


def train_marl(
    plos: list[PloProfile],
    vehicles: list[VehicleProfile],
    capacity_schedule: CapacitySchedule | None,
    episodes: int | None = None,
    horizon: int | None = None,
    hp: MarlHyperparams | None = None,
) -> MarlResult:
    """Train all operator agents; returns policies plus per-episode curves."""
    hp = hp or MarlHyperparams()
    if episodes is not None or horizon is not None:
        from dataclasses import replace

        hp = replace(
            hp,
            episodes=episodes if episodes is not None else hp.episodes,
            horizon=horizon if horizon is not None else hp.horizon,
        )
    env = IncentiveEnv(
        plos, vehicles, history_len=hp.history_len, capacity_schedule=capacity_schedule
    )
    agents = build_agents(plos, hp, env.state_dim)
    J = env.n_agents
    reward_scale = _reward_scales(plos, vehicles)
    time_to_go = (hp.horizon - np.arange(hp.horizon)) / hp.horizon  # (T,)
    curves: list[EpisodeRecord] = []
    cap_start, cap_end = hp.log_std_cap
    anneal_steps = max(1, int(hp.log_std_cap_fraction * hp.episodes))
    for episode in range(hp.episodes):
        frac = min(1.0, episode / anneal_steps)
        cap = cap_start + (cap_end - cap_start) * frac
        for agent in agents:
            agent.policy.log_std[0] = min(agent.policy.log_std[0], cap)
        states = env.reset()
        state_vecs = [s.vector() for s in states]
        buf_states = [np.empty((hp.horizon, env.state_dim)) for _ in range(J)]
        buf_actions = np.empty((hp.horizon, J))
        buf_logp = np.empty((hp.horizon, J))
        buf_rewards = np.empty((hp.horizon, J))
        buf_r = np.empty((hp.horizon, J))
        buf_arrivals = np.empty((hp.horizon, J))
        for t in range(hp.horizon):
            actions = np.empty(J)
            for j, agent in enumerate(agents):
                buf_states[j][t] = state_vecs[j]
                actions[j], buf_logp[t, j] = agent.act(state_vecs[j])
            payoffs, states, info = env.step(actions)
            state_vecs = [s.vector() for s in states]
            buf_actions[t] = actions
            buf_rewards[t] = payoffs
            buf_r[t] = info["rewards_r"]
            buf_arrivals[t] = info["expected_arrivals"]
        for j, agent in enumerate(agents):
            critic_states = np.concatenate(
                [buf_states[j], time_to_go[:, None]], axis=1
            )
            traj = Trajectory(
                states=buf_states[j],
                actions=buf_actions[:, j].copy(),
                log_probs=buf_logp[:, j].copy(),
                rewards=buf_rewards[:, j] / reward_scale[j],
                critic_states=critic_states,
            )
            values = agent.value_fn.value(critic_states)
            traj = compute_returns_advantages(traj, values, hp.gamma)
            ppo_update(
                agent,
                traj,
                eps=hp.clip_eps,
                epochs=hp.ppo_epochs,
                minibatch=hp.minibatch,
            )
            _check_finite(agent, episode)
            curves.append(
                EpisodeRecord(
                    episode=episode,
                    agent=j,
                    mean_reward=float(buf_rewards[:, j].mean()),
                    mean_r=float(buf_r[:, j].mean()),
                    expected_arrivals=float(buf_arrivals[:, j].mean()),
                )
            )
    result = MarlResult(agents=agents, curves=curves, env=env, hyperparams=hp)
    return result


def greedy_rollout(
    agents: list[PpoAgent],
    env: IncentiveEnv,
    steps: int | None = None,
) -> dict:
    """Roll the deterministic (mean-action) joint policy and report the tail.

    Returns the joint denormalized rewards, payoffs and expected arrivals
    averaged over the second half of the rollout, by which point the
    observation history reflects greedy play only.
    """
    steps = steps if steps is not None else 2 * env.history_len + 10
    states = env.reset()
    state_vecs = [s.vector() for s in states]
    r_hist = np.empty((steps, env.n_agents))
    payoff_hist = np.empty((steps, env.n_agents))
    arrivals_hist = np.empty((steps, env.n_agents))
    for t in range(steps):
        actions = [agent.greedy(state_vecs[j]) for j, agent in enumerate(agents)]
        payoffs, states, info = env.step(actions)
        state_vecs = [s.vector() for s in states]
        r_hist[t] = info["rewards_r"]
        payoff_hist[t] = payoffs
        arrivals_hist[t] = info["expected_arrivals"]
    tail = slice(steps // 2, steps)
    return {
        "rewards_r": r_hist[tail].mean(axis=0),
        "payoffs": payoff_hist[tail].mean(axis=0),
        "expected_arrivals": arrivals_hist[tail].mean(axis=0),
        "trace_r": r_hist,
    }
