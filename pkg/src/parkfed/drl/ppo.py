"""On-policy trajectory bookkeeping and the clipped-surrogate update.

The actor objective for a batch is ``mean(min(P*A, F(P)*A))`` where P is the
probability ratio between the current and the data-collecting policy and F
clamps P into [1 - eps, 1 + eps]; gradient flows through the ratio only where
the unclipped branch is active. The critic is fit to the Monte-Carlo
discounted returns by squared error. Both use mini-batch Adam steps.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .nets import Adam, GaussianPolicy, ValueFunction

__all__ = [
    "Trajectory",
    "compute_returns_advantages",
    "clip_factor",
    "surrogate_objective",
    "ppo_update",
]

ADV_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Trajectory:
    """One agent's episode: states, actions and reward bookkeeping.

    ``returns[t]`` is the discounted tail sum of rewards from t, so
    ``returns[t] == rewards[t] + gamma * returns[t+1]`` with an implicit zero
    after the final step.
    """

    states: np.ndarray  # (T, state_dim)
    actions: np.ndarray  # (T,) normalized actions
    log_probs: np.ndarray  # (T,) under the collecting policy
    rewards: np.ndarray  # (T,)
    returns: np.ndarray | None = None
    advantages: np.ndarray | None = None
    # Critic features: observation plus remaining-steps fraction. The tail
    # return's expectation depends on how many steps are left, which the
    # observation alone cannot reveal on a fixed horizon.
    critic_states: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]

    def critic_inputs(self) -> np.ndarray:
        return self.critic_states if self.critic_states is not None else self.states


def compute_returns_advantages(
    traj: Trajectory, values: np.ndarray, gamma: float
) -> Trajectory:
    """Discounted tail returns and normalized baseline-subtracted advantages.

    Advantages are shifted/scaled to mean 0 and standard deviation 1 per
    batch; a zero-variance batch skips the scaling.
    """
    if not (0.0 <= gamma <= 1.0):
        raise ValueError("gamma must lie in [0, 1]")
    rewards = traj.rewards
    T = rewards.shape[0]
    if T < 1:
        raise ValueError("trajectory must have at least one step")
    returns = np.empty(T)
    acc = 0.0
    for t in range(T - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        returns[t] = acc
    advantages = returns - np.asarray(values, dtype=np.float64)
    std = advantages.std()
    centered = advantages - advantages.mean()
    if std > ADV_STD_FLOOR:
        centered = centered / std
    return replace(traj, returns=returns, advantages=centered)


def clip_factor(ratio: np.ndarray, eps: float) -> np.ndarray:
    """The ratio clamped into [1 - eps, 1 + eps]."""
    return np.clip(ratio, 1.0 - eps, 1.0 + eps)


def surrogate_objective(
    policy: GaussianPolicy,
    states: np.ndarray,
    actions: np.ndarray,
    log_probs_old: np.ndarray,
    advantages: np.ndarray,
    eps: float,
) -> tuple[float, list[np.ndarray]]:
    """Mean clipped surrogate and its gradient w.r.t. the policy parameters.

    Returned gradients are for ASCENT (they point uphill on the objective).
    """
    logp_new, ctx = policy.log_prob(states, actions)
    ratio = np.exp(logp_new - log_probs_old)
    unclipped = ratio * advantages
    clipped = clip_factor(ratio, eps) * advantages
    surrogate = np.minimum(unclipped, clipped)
    # min() takes the unclipped branch on ties, so gradient flows iff it wins
    active = unclipped <= clipped
    d_logp = np.where(active, ratio * advantages, 0.0) / ratio.shape[0]
    grads = policy.backward_logp(ctx, d_logp)
    return float(surrogate.mean()), grads


@dataclass
class PpoAgent:
    """One operator's actor, critic and their optimizers."""

    index: int
    policy: GaussianPolicy
    value_fn: ValueFunction
    actor_opt: Adam
    critic_opt: Adam
    rng: np.random.Generator

    def act(self, state_vec: np.ndarray) -> tuple[float, float]:
        return self.policy.sample(state_vec, self.rng)

    def greedy(self, state_vec: np.ndarray) -> float:
        return float(self.policy.mean(state_vec)[0])


def ppo_update(
    agent: PpoAgent,
    traj: Trajectory,
    eps: float = 0.1,
    epochs: int = 4,
    minibatch: int = 64,
) -> dict:
    """Several epochs of mini-batch ascent on the actor, descent on the critic."""
    if traj.returns is None or traj.advantages is None:
        raise ValueError("call compute_returns_advantages first")
    T = traj.horizon
    critic_inputs = traj.critic_inputs()
    stats = {"surrogate": 0.0, "value_loss": 0.0, "updates": 0}
    for _ in range(epochs):
        order = agent.rng.permutation(T)
        for start in range(0, T, minibatch):
            idx = order[start : start + minibatch]
            surrogate, ascent_grads = surrogate_objective(
                agent.policy,
                traj.states[idx],
                traj.actions[idx],
                traj.log_probs[idx],
                traj.advantages[idx],
                eps,
            )
            agent.actor_opt.step(
                agent.policy.param_arrays(), [-g for g in ascent_grads]
            )
            agent.policy.clamp_log_std()

            values, cache = agent.value_fn.value_with_cache(critic_inputs[idx])
            err = values - traj.returns[idx]
            value_loss = float(err @ err / idx.size)
            critic_grads = agent.value_fn.backward(cache, 2.0 * err / idx.size)
            agent.critic_opt.step(agent.value_fn.param_arrays(), critic_grads)

            stats["surrogate"] += surrogate
            stats["value_loss"] += value_loss
            stats["updates"] += 1
    return stats
