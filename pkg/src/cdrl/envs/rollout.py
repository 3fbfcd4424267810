from __future__ import annotations

from typing import Callable

import numpy as np

from . import make_vec_env


def rollout_distances(policy: Callable[[np.ndarray], np.ndarray], steps: int, seeds,
                      env_id: str = "point-runner", **env_kw):
    """Forward distance of ``len(seeds)`` lockstep runs of ``steps`` steps.

    Distance is the accumulated anchor feature (index 0). Runs continue through
    time-limit and goal resets; a failure (fall) ends that run at the failing
    step. Returns ``(distances, fell)`` arrays.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    seeds = list(seeds)
    venv = make_vec_env(env_id, len(seeds), **env_kw)
    obs = venv.reset(seeds)
    dist = np.zeros(len(seeds))
    fell = np.zeros(len(seeds), dtype=bool)
    for _ in range(steps):
        out = venv.step(policy(obs))
        dist += np.where(fell, 0.0, out.features[:, 0])
        fell |= out.failed
        if fell.all():
            break
        obs = out.obs
    return dist, fell


def rollout_distance(policy, steps: int, seed: int, env_id: str = "point-runner", **env_kw):
    dist, fell = rollout_distances(policy, steps, [seed], env_id, **env_kw)
    return float(dist[0]), bool(fell[0])
