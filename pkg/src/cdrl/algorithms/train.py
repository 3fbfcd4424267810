"""Reward-randomized outer loop shared by the three learners.

Every parallel environment gets its own condition drawn uniformly from
``[-1, 1]^(N-1)``; all conditions are redrawn every ``refresh_period`` units
(PPO updates, or agent steps for DDPG/DQN) and otherwise held fixed, even
across episode boundaries.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..checkpoint import Checkpoint
from ..nn import mlp_forward
from ..reward_space import (RefreshSchedule, RewardSpace, conditional_reward, refresh_tick,
                            sample_conditions)
from ..seeding import child_rng, derive_seed
from .common import ReplayBuffer, argmax_lowest, epsilon_greedy, ou_noise_step
from .config import AlgoConfig
from .ddpg import ddpg_act, ddpg_update, init_ddpg
from .dqn import dqn_update, epsilon_at, init_dqn
from .policies import space_to_header
from .ppo import add_advantages, collect_rollout, init_ppo, network_input, ppo_update

log = logging.getLogger(__name__)

LOG_COLUMNS = ("agent_steps", "updates", "mean_eval_return", "mean_eval_fitness", "loss_policy",
               "loss_value", "clip_fraction")


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    log: list[dict]
    agent_steps: int = 0
    updates: int = 0
    condition_draws: int = 0
    debug: list[dict] = field(default_factory=list)


class _Run:
    """Bookkeeping common to the on- and off-policy loops."""

    def __init__(self, cfg: AlgoConfig, space: RewardSpace, env_factory, seed: int,
                 conditional: bool, debug: bool):
        self.cfg, self.space, self.env_factory = cfg, space, env_factory
        self.seed, self.conditional, self.debug_on = seed, conditional, debug
        self.spec = env_factory(1).spec
        if self.spec.feature_dim != space.feature_dim:
            raise ValueError(f"environment {self.spec.env_id} emits {self.spec.feature_dim} features "
                             f"but the reward space has {space.feature_dim}")
        self.input_dim = self.spec.obs_dim + (space.condition_dim if conditional else 0)
        self.cond_rng = child_rng(seed, "conditions")
        self.act_rng = child_rng(seed, "act")
        self.mb_rng = child_rng(seed, "minibatch")
        self.agent_steps = 0
        self.updates = 0
        self.draws = 0
        self.n_evals = 0
        self.rows: list[dict] = []
        self.debug: list[dict] = []

    def draw(self, n: int) -> np.ndarray:
        if not self.conditional:
            return np.zeros((n, self.space.condition_dim))
        self.draws += 1
        return sample_conditions(self.space, n, self.cond_rng)

    def start(self, n: int):
        venv = self.env_factory(n)
        obs = venv.reset([derive_seed(self.seed, "env", i) for i in range(n)])
        return venv, obs

    def x(self, obs, conds) -> np.ndarray:
        return network_input(obs, conds, self.conditional)

    def evaluate(self, act: Callable) -> tuple[float, float]:
        """Mean undiscounted conditional return and anchor-feature total over
        one episode per eval env, each under a freshly drawn condition."""
        n = self.cfg.eval_episodes
        k = self.n_evals
        self.n_evals += 1
        conds = (sample_conditions(self.space, n, child_rng(self.seed, "eval", k))
                 if self.conditional else np.zeros((n, self.space.condition_dim)))
        venv = self.env_factory(n)
        obs = venv.reset([derive_seed(self.seed, "eval-env", k, i) for i in range(n)])
        ret, fit = np.zeros(n), np.zeros(n)
        done = np.zeros(n, dtype=bool)
        for _ in range(self.spec.max_episode_steps):
            out = venv.step(act(self.x(obs, conds)))
            ret += np.where(done, 0.0, conditional_reward(self.space, conds, out.features))
            fit += np.where(done, 0.0, out.features[:, 0])
            done |= out.terminated | out.truncated
            if done.all():
                break
            obs = out.obs
        return float(ret.mean()), float(fit.mean())

    def maybe_log(self, prev_steps: int, final: bool, act: Callable, stats: dict) -> None:
        every = self.cfg.eval_every
        if not final and self.agent_steps // every == prev_steps // every:
            return
        ret, fit = self.evaluate(act)
        row = {"agent_steps": self.agent_steps, "updates": self.updates,
               "mean_eval_return": ret, "mean_eval_fitness": fit}
        for key in ("loss_policy", "loss_value", "clip_fraction"):
            row[key] = stats.get(key)
        self.rows.append(row)
        log.info("steps=%d updates=%d eval_return=%.4f eval_fitness=%.4f", self.agent_steps,
                 self.updates, ret, fit)

    def header(self) -> dict[str, str]:
        spec = self.spec
        h = {"format": "cdrl-checkpoint-1", "algorithm": self.cfg.algorithm, "env_id": spec.env_id,
             "conditional": "true" if self.conditional else "false", "obs_dim": str(spec.obs_dim),
             "input_dim": str(self.input_dim), "action_kind": spec.action_kind,
             "action_dim": str(spec.action_dim), "n_actions": str(spec.n_actions),
             "action_low": "%.17g" % spec.action_low, "action_high": "%.17g" % spec.action_high}
        h.update(space_to_header(self.space))
        h.update({"seed": str(self.seed), "agent_steps": str(self.agent_steps),
                  "updates": str(self.updates), "condition_draws": str(self.draws)})
        return h

    def result(self, networks: dict, extras: dict | None = None) -> TrainResult:
        ckpt = Checkpoint(self.header(), networks, extras or {})
        return TrainResult(ckpt, self.rows, self.agent_steps, self.updates, self.draws, self.debug)


def train(cfg: AlgoConfig, space: RewardSpace, env_factory: Callable[[int], object], seed: int,
          conditional: bool = True, debug: bool = False) -> TrainResult:
    """Train a conditional (or, with ``conditional=False``, a fixed-reward
    baseline) agent for ``cfg.total_steps`` agent steps.

    ``env_factory(n)`` must return a vectorized env of ``n`` instances.
    With ``debug`` the per-step conditions, features and rewards are kept.
    """
    errs = cfg.validate()
    if errs:
        raise ValueError("; ".join(f"{k}: {m}" for k, m in errs))
    run = _Run(cfg, space, env_factory, seed, conditional, debug)
    if cfg.algorithm == "ppo":
        return _train_ppo(run)
    return _train_off_policy(run)


def _train_ppo(run: _Run) -> TrainResult:
    cfg, space = run.cfg, run.space
    agent = init_ppo(run.input_dim, run.spec.action_dim, cfg, child_rng(run.seed, "init"))
    E, H = cfg.n_envs, cfg.horizon
    n_updates = cfg.total_steps // (E * H)
    sched = RefreshSchedule(cfg.refresh_period)
    if n_updates:
        venv, obs = run.start(E)
        conds = run.draw(E)

    def act(x):
        return mlp_forward(agent.policy, x)[0]

    for u in range(n_updates):
        batch, obs = collect_rollout(agent, venv, obs, conds, H, space, run.act_rng,
                                     run.conditional, keep_features=run.debug_on)
        add_advantages(batch, cfg.gamma, cfg.gae_lambda)
        agent, stats = ppo_update(agent, batch, cfg, run.mb_rng)
        if run.debug_on:
            run.debug.append({"conditions": batch.conditions, "features": batch.features,
                              "rewards": batch.rewards, "update": u})
        prev = run.agent_steps
        run.agent_steps += E * H
        run.updates += 1
        if refresh_tick(sched) and u < n_updates - 1:
            conds = run.draw(E)
        run.maybe_log(prev, u == n_updates - 1, act, stats)
    return run.result({"policy": agent.policy, "value": agent.value}, {"log_std": agent.log_std})


def _train_off_policy(run: _Run) -> TrainResult:
    cfg, space, spec = run.cfg, run.space, run.spec
    dqn = cfg.algorithm == "dqn"
    if dqn and not spec.discrete:
        raise ValueError("dqn needs a discrete action space")
    if not dqn and spec.discrete:
        raise ValueError("ddpg needs a continuous action space")
    init_rng = child_rng(run.seed, "init")
    if dqn:
        agent = init_dqn(run.input_dim, spec.n_actions, cfg, init_rng)
    else:
        agent = init_ddpg(run.input_dim, spec.action_dim, cfg, init_rng, spec.action_low,
                          spec.action_high)
    E = cfg.n_envs
    n_vec = cfg.total_steps // E
    buffer = ReplayBuffer(cfg.replay_capacity, run.input_dim, spec.action_dim, discrete=dqn)
    sched = RefreshSchedule(cfg.refresh_period)
    noise = np.zeros((E, spec.action_dim))
    stats: dict = {}
    if n_vec:
        venv, obs = run.start(E)
        conds = run.draw(E)

    def act(x):
        if dqn:
            return argmax_lowest(mlp_forward(agent.q, x)[0])
        return ddpg_act(agent, x)

    for step in range(n_vec):
        x = run.x(obs, conds)
        if dqn:
            eps = epsilon_at(cfg, run.agent_steps)
            q, _ = mlp_forward(agent.q, x)
            actions = np.array([epsilon_greedy(q[i], eps, run.act_rng) for i in range(E)])
        else:
            noise, sample = ou_noise_step(noise, cfg.ou_theta, cfg.ou_sigma, run.act_rng)
            actions = np.clip(ddpg_act(agent, x) + sample, spec.action_low, spec.action_high)
        out = venv.step(actions)
        rewards = conditional_reward(space, conds, out.features)
        buffer.push(x, actions, run.x(out.final_obs, conds), rewards, out.terminated)
        if run.debug_on:
            run.debug.append({"conditions": conds.copy(), "features": out.features,
                              "rewards": rewards, "step": step})
        if not dqn:
            noise[out.terminated | out.truncated] = 0.0
        obs = out.obs
        prev = run.agent_steps
        run.agent_steps += E
        due = [refresh_tick(sched) for _ in range(E)]
        if any(due) and step < n_vec - 1:
            conds = run.draw(E)
        if (run.agent_steps >= cfg.learning_starts and buffer.size >= cfg.batch_size
                and run.agent_steps // cfg.train_every > prev // cfg.train_every):
            for _ in range(cfg.gradient_steps):
                mb = buffer.sample(cfg.batch_size, run.mb_rng)
                if dqn:
                    agent, stats = dqn_update(agent, mb, cfg, run.updates)
                else:
                    agent, stats = ddpg_update(agent, mb, cfg)
                run.updates += 1
        run.maybe_log(prev, step == n_vec - 1, act, stats)
    if dqn:
        return run.result({"q": agent.q})
    return run.result({"actor": agent.actor, "critic": agent.critic})
