from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import MlpParams, mlp_forward


def concat_condition(obs, c) -> np.ndarray:
    """``obs ⊕ c``, observation first; broadcasts a single condition over a batch."""
    obs = np.asarray(obs, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if obs.ndim == 2 and c.ndim == 1:
        c = np.broadcast_to(c, (obs.shape[0], c.shape[0]))
    return np.concatenate([obs, c], axis=-1)


def gae_advantages(rewards, values, terminals, bootstrap_value, gamma: float, lam: float):
    """Generalized advantage estimates and returns.

    Arrays are time-major, ``(T,)`` or ``(T, n_envs)``. ``terminals[t]`` marks
    that the episode ended at step ``t``; nothing is bootstrapped across it.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    terminals = np.asarray(terminals, dtype=bool)
    if not rewards.shape == values.shape == terminals.shape:
        raise ValueError(f"length mismatch: rewards {rewards.shape}, values {values.shape}, "
                         f"terminals {terminals.shape}")
    T = rewards.shape[0]
    adv = np.zeros_like(rewards)
    next_value = np.asarray(bootstrap_value, dtype=np.float64)
    running = np.zeros_like(rewards[0]) if T else 0.0
    for t in range(T - 1, -1, -1):
        live = 1.0 - terminals[t]
        delta = rewards[t] + gamma * next_value * live - values[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


class ReplayBuffer:
    """Ring buffer of conditional transitions ``(s⊕c, a, s'⊕c, r_c, terminated)``."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int, discrete: bool = False):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64) if discrete else np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.terminated = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def push(self, obs, action, next_obs, reward, terminated) -> None:
        """Append a batch of transitions (leading axis) in order."""
        obs = np.atleast_2d(obs)
        n = obs.shape[0]
        action = np.asarray(action).reshape((n,) + self.actions.shape[1:])
        next_obs = np.atleast_2d(next_obs)
        reward = np.atleast_1d(reward)
        terminated = np.atleast_1d(terminated)
        skip = max(0, n - self.capacity)  # only the newest `capacity` survive
        idx = (self.cursor + np.arange(skip, n)) % self.capacity
        self.obs[idx] = obs[skip:]
        self.actions[idx] = action[skip:]
        self.next_obs[idx] = next_obs[skip:]
        self.rewards[idx] = reward[skip:]
        self.terminated[idx] = terminated[skip:]
        self.cursor = (self.cursor + n) % self.capacity
        self.size = min(self.size + n, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> "Minibatch":
        if self.size == 0:
            raise ValueError("cannot sample an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Minibatch(self.obs[idx], self.actions[idx], self.next_obs[idx],
                         self.rewards[idx], self.terminated[idx])

    def contents(self) -> "Minibatch":
        """Stored transitions, oldest first."""
        if self.size < self.capacity:
            idx = np.arange(self.size)
        else:
            idx = (np.arange(self.capacity) + self.cursor) % self.capacity
        return Minibatch(self.obs[idx], self.actions[idx], self.next_obs[idx],
                         self.rewards[idx], self.terminated[idx])


@dataclass
class Minibatch:
    obs: np.ndarray
    actions: np.ndarray
    next_obs: np.ndarray
    rewards: np.ndarray
    terminated: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)


def soft_update(target: MlpParams, online: MlpParams, rho: float) -> MlpParams:
    if not 0.0 <= rho <= 1.0:
        raise ValueError("soft update coefficient must lie in [0, 1]")
    t_arrs, o_arrs = target.arrays(), online.arrays()
    if any(t.shape != o.shape for t, o in zip(t_arrs, o_arrs)) or len(t_arrs) != len(o_arrs):
        raise ValueError("target and online networks differ in shape")
    return target.with_arrays([(1.0 - rho) * t + rho * o for t, o in zip(t_arrs, o_arrs)])


def ou_noise_step(state, theta: float, sigma: float, rng: np.random.Generator):
    """Ornstein-Uhlenbeck step toward zero; returns (new_state, sample)."""
    if not 0.0 < theta <= 1.0 or sigma < 0:
        raise ValueError("need 0 < theta <= 1 and sigma >= 0")
    state = np.asarray(state, dtype=np.float64)
    new = state - theta * state + sigma * rng.standard_normal(state.shape)
    return new, new.copy()


def argmax_lowest(q) -> np.ndarray:
    """Row-wise argmax with ties resolved to the lowest index."""
    q = np.asarray(q)
    return np.argmax(q == q.max(axis=-1, keepdims=True), axis=-1)


def epsilon_greedy(q_values, epsilon: float, rng: np.random.Generator) -> int:
    q = np.asarray(q_values, dtype=np.float64)
    if q.size == 0:
        raise ValueError("q_values must be nonempty")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(q.size))
    return int(argmax_lowest(q))


def dqn_targets(batch: Minibatch, target_q: MlpParams, gamma: float) -> np.ndarray:
    q_next, _ = mlp_forward(target_q, batch.next_obs)
    return batch.rewards + gamma * (1.0 - batch.terminated) * q_next.max(axis=1)


def squash(raw: np.ndarray, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    return low + 0.5 * (np.tanh(raw) + 1.0) * (high - low)


def ddpg_targets(batch: Minibatch, target_actor: MlpParams, target_critic: MlpParams,
                 gamma: float, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    raw, _ = mlp_forward(target_actor, batch.next_obs)
    q_next, _ = mlp_forward(target_critic, np.concatenate([batch.next_obs, squash(raw, low, high)], axis=1))
    y = batch.rewards + gamma * (1.0 - batch.terminated) * q_next[:, 0]
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("non-finite critic targets")
    return y
