"""Conditional actor-critic with the clipped PPO surrogate and GAE."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn import (AdamState, GaussianHead, MlpParams, adam_init, adam_step, clamp_log_std,
                  gaussian_entropy, gaussian_logprob, gaussian_logprob_grads, init_mlp,
                  mlp_forward, mlp_grad)
from ..reward_space import RewardSpace, conditional_reward
from .common import concat_condition, gae_advantages
from .config import AlgoConfig


@dataclass
class PpoAgent:
    policy: MlpParams
    log_std: np.ndarray
    value: MlpParams
    policy_adam: AdamState
    log_std_adam: AdamState
    value_adam: AdamState


def init_ppo(input_dim: int, action_dim: int, cfg: AlgoConfig, rng: np.random.Generator) -> PpoAgent:
    sizes = (input_dim, *cfg.hidden_sizes)
    policy = init_mlp(sizes + (action_dim,), rng, cfg.activation, cfg.layer_norm)
    value = init_mlp(sizes + (1,), rng, cfg.activation, cfg.layer_norm)
    log_std = np.zeros(action_dim)
    return PpoAgent(policy, log_std, value, adam_init(policy), adam_init([log_std]), adam_init(value))


def ppo_act(agent: PpoAgent, x: np.ndarray, rng: np.random.Generator):
    """Sample actions for a batch of inputs; returns (actions, log-probs, values)."""
    mean, _ = mlp_forward(agent.policy, x)
    head = GaussianHead(mean, agent.log_std)
    actions = head.sample(rng)
    if not np.all(np.isfinite(actions)):
        bad = ~np.isfinite(actions).all(axis=1)
        raise FloatingPointError(f"non-finite policy output for env rows {np.flatnonzero(bad).tolist()}, "
                                 f"inputs {x[bad].tolist()}")
    values, _ = mlp_forward(agent.value, x)
    return actions, gaussian_logprob(head, actions), values[:, 0]


@dataclass
class RolloutBatch:
    """Time-major ``(H, n_envs, ...)`` records of one rollout segment.

    ``conditions`` are the reward conditions; ``inputs`` what the networks saw
    (observation, plus the condition for conditional agents).
    """

    obs: np.ndarray
    conditions: np.ndarray
    inputs: np.ndarray
    actions: np.ndarray
    logp: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    terminated: np.ndarray
    truncated: np.ndarray
    truncation_values: np.ndarray
    bootstrap_value: np.ndarray
    features: np.ndarray | None = None
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_envs(self) -> int:
        return self.rewards.shape[1]


def network_input(obs, conds, conditional: bool) -> np.ndarray:
    return concat_condition(obs, conds) if conditional else np.asarray(obs, dtype=np.float64)


def collect_rollout(agent: PpoAgent, venv, obs: np.ndarray, conds: np.ndarray, horizon: int,
                    space: RewardSpace, rng: np.random.Generator, conditional: bool = True,
                    keep_features: bool = False):
    """Run ``horizon`` steps in every env; returns (batch, next observations).

    Finished episodes are reset in place and keep their condition.
    """
    E = obs.shape[0]
    rec = {k: [] for k in ("obs", "inputs", "actions", "logp", "values", "rewards", "terminated",
                           "truncated", "truncation_values", "features")}
    for _ in range(horizon):
        x = network_input(obs, conds, conditional)
        actions, logp, values = ppo_act(agent, x, rng)
        out = venv.step(actions)
        trunc_v = np.zeros(E)
        if out.truncated.any():
            v_final, _ = mlp_forward(agent.value, network_input(out.final_obs, conds, conditional))
            trunc_v = np.where(out.truncated, v_final[:, 0], 0.0)
        rec["obs"].append(obs)
        rec["inputs"].append(x)
        rec["actions"].append(actions)
        rec["logp"].append(logp)
        rec["values"].append(values)
        rec["rewards"].append(conditional_reward(space, conds, out.features))
        rec["terminated"].append(out.terminated)
        rec["truncated"].append(out.truncated)
        rec["truncation_values"].append(trunc_v)
        rec["features"].append(out.features)
        obs = out.obs
    boot, _ = mlp_forward(agent.value, network_input(obs, conds, conditional))
    arrays = {k: np.array(v) for k, v in rec.items()}
    if not keep_features:
        arrays["features"] = None
    batch = RolloutBatch(conditions=np.broadcast_to(conds, (horizon,) + conds.shape).copy(),
                         bootstrap_value=boot[:, 0], **arrays)
    return batch, obs


def add_advantages(batch: RolloutBatch, gamma: float, lam: float) -> RolloutBatch:
    # truncation: fold gamma * V(final obs) into the reward and cut the trace there
    rewards = batch.rewards + gamma * batch.truncation_values * batch.truncated
    ends = batch.terminated | batch.truncated
    batch.advantages, batch.returns = gae_advantages(rewards, batch.values, ends,
                                                     batch.bootstrap_value, gamma, lam)
    return batch


def ppo_policy_loss_grad(logp_new, logp_old, adv, clip: float):
    """Clipped surrogate loss, its gradient w.r.t. ``logp_new``, and clip fraction."""
    ratio = np.exp(logp_new - logp_old)
    s1 = ratio * adv
    s2 = np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv
    n = len(adv)
    loss = -np.mean(np.minimum(s1, s2))
    dlogp = -np.where(s1 <= s2, s1, 0.0) / n
    clip_frac = float(np.mean(np.abs(ratio - 1.0) > clip))
    return float(loss), dlogp, clip_frac


def normalize(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / max(adv.std(), 1e-8)


def ppo_update(agent: PpoAgent, batch: RolloutBatch, cfg: AlgoConfig, rng: np.random.Generator):
    """Epochs of minibatch Adam steps on policy, log-std and value networks."""
    n = batch.horizon * batch.n_envs
    x = batch.inputs.reshape(n, -1)
    actions = batch.actions.reshape(n, -1)
    logp_old = batch.logp.reshape(n)
    adv = normalize(batch.advantages.reshape(n))
    returns = batch.returns.reshape(n)
    policy, log_std, value = agent.policy, agent.log_std, agent.value
    p_adam, s_adam, v_adam = agent.policy_adam, agent.log_std_adam, agent.value_adam
    stats = {"loss_policy": [], "loss_value": [], "clip_fraction": []}
    k = 0
    for _ in range(cfg.epochs):
        for mb in np.array_split(rng.permutation(n), cfg.minibatches):
            mean, pcache = mlp_forward(policy, x[mb])
            head = GaussianHead(mean, log_std)
            logp = gaussian_logprob(head, actions[mb])
            loss_pi, dlogp, clip_frac = ppo_policy_loss_grad(logp, logp_old[mb], adv[mb], cfg.clip)
            loss_pi -= cfg.entropy_coef * gaussian_entropy(log_std)
            dmean, dlogstd = gaussian_logprob_grads(head, actions[mb])
            g_policy, _ = mlp_grad(policy, pcache, dlogp[:, None] * dmean)
            g_log_std = (dlogp[:, None] * dlogstd).sum(axis=0) - cfg.entropy_coef

            v, vcache = mlp_forward(value, x[mb])
            diff = v[:, 0] - returns[mb]
            loss_v = 0.5 * float(np.mean(diff * diff))
            g_value, _ = mlp_grad(value, vcache, diff[:, None] / len(mb))
            if not (np.isfinite(loss_pi) and np.isfinite(loss_v)):
                raise FloatingPointError(f"non-finite PPO loss in minibatch {k}")

            policy, p_adam = adam_step(policy, g_policy, p_adam, cfg.lr_policy)
            (log_std,), s_adam = adam_step([log_std], [g_log_std], s_adam, cfg.lr_policy)
            log_std = clamp_log_std(log_std)
            value, v_adam = adam_step(value, g_value, v_adam, cfg.lr_value)
            stats["loss_policy"].append(loss_pi)
            stats["loss_value"].append(loss_v)
            stats["clip_fraction"].append(clip_frac)
            k += 1
    new = PpoAgent(policy, log_std, value, p_adam, s_adam, v_adam)
    return new, {key: float(np.mean(vals)) for key, vals in stats.items()}
