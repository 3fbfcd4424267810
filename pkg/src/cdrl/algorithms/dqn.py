"""Conditional deep Q-learning with a lagged target network."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import AdamState, MlpParams, adam_init, adam_step, init_mlp, mlp_forward, mlp_grad
from .common import Minibatch, dqn_targets
from .config import AlgoConfig


@dataclass
class DqnAgent:
    q: MlpParams
    q_target: MlpParams
    adam: AdamState


def init_dqn(input_dim: int, n_actions: int, cfg: AlgoConfig, rng: np.random.Generator) -> DqnAgent:
    q = init_mlp((input_dim, *cfg.hidden_sizes, n_actions), rng, cfg.activation, cfg.layer_norm)
    return DqnAgent(q, q.copy(), adam_init(q))


def epsilon_at(cfg: AlgoConfig, agent_steps: int) -> float:
    """Linear decay from ``epsilon_start`` to ``epsilon_end`` over the first
    ``epsilon_fraction`` of the budget, flat afterwards."""
    horizon = cfg.epsilon_fraction * cfg.total_steps
    if horizon <= 0:
        return cfg.epsilon_end
    frac = min(agent_steps / horizon, 1.0)
    return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)


def dqn_update(agent: DqnAgent, batch: Minibatch, cfg: AlgoConfig, updates_done: int):
    """One squared-error step on the taken actions' Q-values.

    The target network is copied from the online one every
    ``target_update_interval`` updates.
    """
    y = dqn_targets(batch, agent.q_target, cfg.gamma)
    q, cache = mlp_forward(agent.q, batch.obs)
    rows = np.arange(len(batch))
    diff = q[rows, batch.actions] - y
    upstream = np.zeros_like(q)
    upstream[rows, batch.actions] = diff / len(batch)
    grads, _ = mlp_grad(agent.q, cache, upstream)
    new_q, adam = adam_step(agent.q, grads, agent.adam, cfg.lr_value)
    target = agent.q_target
    if (updates_done + 1) % cfg.target_update_interval == 0:
        target = new_q.copy()
    return DqnAgent(new_q, target, adam), {"loss_value": 0.5 * float(np.mean(diff * diff))}
