"""Desk-scale environments that emit reward indicator features every step."""
from __future__ import annotations

from .base import EnvSpec, EpisodeOverError, SerialVecEnv, StepResult, VecStep
from .chain import TabularEnv, TabularMdp, bellman_residual, chain_mdp, value_iteration
from .grid_collect import DEFAULT_MAP, GridCollect
from .point_runner import PointRunner, PointRunnerVec

ENV_IDS = ("point-runner", "grid-collect", "chain-mdp")


def make_env(env_id: str, grid_map=None, max_episode_steps: int | None = None):
    kw = {} if max_episode_steps is None else {"max_episode_steps": max_episode_steps}
    if env_id == "point-runner":
        return PointRunner(**kw)
    if env_id == "grid-collect":
        return GridCollect(grid_map or DEFAULT_MAP, **kw)
    if env_id == "chain-mdp":
        return TabularEnv(chain_mdp(), **kw)
    raise ValueError(f"unknown environment {env_id!r}; expected one of {', '.join(ENV_IDS)}")


def make_vec_env(env_id: str, n: int, grid_map=None, max_episode_steps: int | None = None):
    if env_id == "point-runner":
        kw = {} if max_episode_steps is None else {"max_episode_steps": max_episode_steps}
        return PointRunnerVec(n, **kw)
    return SerialVecEnv([make_env(env_id, grid_map, max_episode_steps) for _ in range(n)])


def env_spec(env_id: str, grid_map=None, max_episode_steps: int | None = None) -> EnvSpec:
    return make_env(env_id, grid_map, max_episode_steps).spec
