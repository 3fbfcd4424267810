"""Deterministic policies reconstructed from checkpoints."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..checkpoint import Checkpoint
from ..nn import MlpParams, mlp_forward
from ..reward_space import RewardSpace
from .common import argmax_lowest, concat_condition, squash


def space_to_header(space: RewardSpace) -> dict[str, str]:
    return {
        "reward_space.features": ",".join(space.feature_names),
        "reward_space.anchor_index": str(space.anchor_index),
        "reward_space.anchor_weight": "%.17g" % space.anchor_weight,
        "reward_space.ranges": ",".join("%.17g:%.17g" % r for r in space.ranges),
    }


def space_from_header(header: dict[str, str]) -> RewardSpace:
    ranges = [tuple(float(v) for v in item.split(":"))
              for item in header["reward_space.ranges"].split(",") if item]
    return RewardSpace(tuple(header["reward_space.features"].split(",")), tuple(ranges),
                       float(header["reward_space.anchor_weight"]),
                       int(header["reward_space.anchor_index"]))


@dataclass
class Policy:
    """Greedy/mean action selection for a trained agent.

    ``act`` takes network inputs (observation, plus condition when
    conditional); ``bind(c)`` returns an observation-only callable.
    """

    algorithm: str
    env_id: str
    conditional: bool
    obs_dim: int
    space: RewardSpace
    networks: dict[str, MlpParams]
    action_low: float = -1.0
    action_high: float = 1.0

    @property
    def condition_dim(self) -> int:
        return self.space.condition_dim if self.conditional else 0

    @property
    def input_dim(self) -> int:
        return self.obs_dim + self.condition_dim

    def act(self, x: np.ndarray) -> np.ndarray:
        if self.algorithm == "ppo":
            mean, _ = mlp_forward(self.networks["policy"], x)
            return mean
        if self.algorithm == "ddpg":
            raw, _ = mlp_forward(self.networks["actor"], x)
            return squash(raw, self.action_low, self.action_high)
        q, _ = mlp_forward(self.networks["q"], x)
        return argmax_lowest(q)

    def bind(self, c=None):
        if not self.conditional:
            if c is not None and np.size(c) > 0:
                raise ValueError("non-conditional policy takes no condition")
            return self.act
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (self.condition_dim,):
            raise ValueError(f"condition must have {self.condition_dim} entries (N-1), got {c.size}")
        return lambda obs: self.act(concat_condition(obs, c))


def policy_from_checkpoint(ckpt: Checkpoint) -> Policy:
    h = ckpt.header
    return Policy(h["algorithm"], h["env_id"], h["conditional"] == "true", int(h["obs_dim"]),
                  space_from_header(h), dict(ckpt.networks),
                  float(h.get("action_low", -1.0)), float(h.get("action_high", 1.0)))
