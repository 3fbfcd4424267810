from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EpisodeOverError(RuntimeError):
    """Raised when stepping an environment whose episode already ended."""


@dataclass(frozen=True)
class EnvSpec:
    env_id: str
    obs_dim: int
    feature_names: tuple[str, ...]
    max_episode_steps: int
    action_kind: str  # "box" or "discrete"
    action_dim: int = 1
    action_low: float = -1.0
    action_high: float = 1.0
    n_actions: int = 0

    @property
    def feature_dim(self) -> int:
        return len(self.feature_names)

    @property
    def discrete(self) -> bool:
        return self.action_kind == "discrete"


@dataclass
class StepResult:
    observation: np.ndarray
    features: np.ndarray
    terminated: bool
    truncated: bool
    failed: bool = False  # termination by failure (a fall), as opposed to success
    clamped: bool = False  # the continuous action was clipped into bounds


@dataclass
class VecStep:
    """Batched step output. ``obs`` is already reset where an episode ended;
    ``final_obs`` holds the true successor observation for every env."""

    obs: np.ndarray
    features: np.ndarray
    terminated: np.ndarray
    truncated: np.ndarray
    failed: np.ndarray
    final_obs: np.ndarray
    info: dict = field(default_factory=dict)


class SerialVecEnv:
    """Steps a list of single environments in fixed order, auto-resetting.

    Each env keeps its own generator seeded at ``reset``; later automatic
    resets draw from that same generator.
    """

    def __init__(self, envs):
        self.envs = list(envs)
        self.spec: EnvSpec = self.envs[0].spec
        self.n = len(self.envs)

    def reset(self, seeds) -> np.ndarray:
        return np.stack([env.reset(int(s)) for env, s in zip(self.envs, seeds)])

    def step(self, actions) -> VecStep:
        obs, final, feats, term, trunc, failed = [], [], [], [], [], []
        for env, a in zip(self.envs, actions):
            res = env.step(a)
            final.append(res.observation)
            feats.append(res.features)
            term.append(res.terminated)
            trunc.append(res.truncated)
            failed.append(res.failed)
            obs.append(env.reset() if (res.terminated or res.truncated) else res.observation)
        return VecStep(np.stack(obs), np.stack(feats), np.array(term), np.array(trunc),
                       np.array(failed), np.stack(final))
