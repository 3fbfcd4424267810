"""Conditional DDPG: deterministic tanh-squashed actor, Q critic on (s⊕c, a)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import AdamState, MlpParams, adam_init, adam_step, init_mlp, mlp_forward, mlp_grad
from .common import Minibatch, ddpg_targets, soft_update, squash
from .config import AlgoConfig


@dataclass
class DdpgAgent:
    actor: MlpParams
    critic: MlpParams
    actor_target: MlpParams
    critic_target: MlpParams
    actor_adam: AdamState
    critic_adam: AdamState
    low: float = -1.0
    high: float = 1.0


def init_ddpg(input_dim: int, action_dim: int, cfg: AlgoConfig, rng: np.random.Generator,
              low: float = -1.0, high: float = 1.0) -> DdpgAgent:
    actor = init_mlp((input_dim, *cfg.hidden_sizes, action_dim), rng, cfg.activation, cfg.layer_norm)
    critic = init_mlp((input_dim + action_dim, *cfg.hidden_sizes, 1), rng, cfg.activation,
                      cfg.layer_norm)
    return DdpgAgent(actor, critic, actor.copy(), critic.copy(), adam_init(actor), adam_init(critic),
                     low, high)


def ddpg_act(agent: DdpgAgent, x: np.ndarray) -> np.ndarray:
    raw, _ = mlp_forward(agent.actor, x)
    return squash(raw, agent.low, agent.high)


def critic_step(agent: DdpgAgent, batch: Minibatch, y: np.ndarray, lr: float):
    inp = np.concatenate([batch.obs, batch.actions.reshape(len(batch), -1)], axis=1)
    q, cache = mlp_forward(agent.critic, inp)
    diff = q[:, 0] - y
    grads, _ = mlp_grad(agent.critic, cache, diff[:, None] / len(batch))
    critic, adam = adam_step(agent.critic, grads, agent.critic_adam, lr)
    return critic, adam, 0.5 * float(np.mean(diff * diff))


def ddpg_update(agent: DdpgAgent, batch: Minibatch, cfg: AlgoConfig):
    """Critic regression onto bootstrapped targets, then one actor ascent step
    through the refreshed critic, then soft target updates."""
    if len(batch) == 0:
        raise ValueError("empty minibatch")
    y = ddpg_targets(batch, agent.actor_target, agent.critic_target, cfg.gamma, agent.low, agent.high)
    critic, critic_adam, loss_v = critic_step(agent, batch, y, cfg.lr_value)

    raw, acache = mlp_forward(agent.actor, batch.obs)
    t = np.tanh(raw)
    a = agent.low + 0.5 * (t + 1.0) * (agent.high - agent.low)
    q, ccache = mlp_forward(critic, np.concatenate([batch.obs, a], axis=1))
    n = len(batch)
    _, d_in = mlp_grad(critic, ccache, np.full((n, 1), -1.0 / n))
    d_action = d_in[:, batch.obs.shape[1]:]
    d_raw = d_action * 0.5 * (agent.high - agent.low) * (1.0 - t * t)
    g_actor, _ = mlp_grad(agent.actor, acache, d_raw)
    actor, actor_adam = adam_step(agent.actor, g_actor, agent.actor_adam, cfg.lr_policy)

    new = DdpgAgent(actor, critic, soft_update(agent.actor_target, actor, cfg.soft_update),
                    soft_update(agent.critic_target, critic, cfg.soft_update),
                    actor_adam, critic_adam, agent.low, agent.high)
    return new, {"loss_policy": -float(np.mean(q)), "loss_value": loss_v}
