"""1-D runner with a fall threshold on speed.

Dynamics: ``v' = clip(v + 0.1 a - 0.02 v, -2, 2)``, ``x' = x + 0.1 v'``; the
episode ends in a fall when ``|v'| > 1.5``. Features per step are forward
progress (anchor), an alive bonus, and a negative squared-action cost.
"""
from __future__ import annotations

import numpy as np

from .base import EnvSpec, EpisodeOverError, StepResult, VecStep

FEATURES = ("forward", "healthy", "control")
FALL_SPEED = 1.5
START_SPEED = 0.05
WRAP = 10.0

SPEC = EnvSpec("point-runner", obs_dim=2, feature_names=FEATURES, max_episode_steps=200,
               action_kind="box", action_dim=1, action_low=-1.0, action_high=1.0)


def dynamics(x, v, a):
    """Elementwise transition; works on scalars and arrays alike."""
    v_next = np.clip(v + 0.1 * a - 0.02 * v, -2.0, 2.0)
    x_next = x + 0.1 * v_next
    fell = np.abs(v_next) > FALL_SPEED
    features = np.stack([x_next - x, np.where(fell, 0.0, 1.0), -a * a], axis=-1)
    return x_next, v_next, fell, features


def observe(x, v):
    return np.stack([np.mod(x, WRAP) / WRAP, v], axis=-1)


class PointRunner:
    spec = SPEC

    def __init__(self, max_episode_steps: int = 200):
        self.max_episode_steps = max_episode_steps
        self.rng = np.random.default_rng(0)
        self.x = self.v = 0.0
        self.t = 0
        self.done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.x = 0.0
        self.v = float(self.rng.uniform(-START_SPEED, START_SPEED))
        self.t = 0
        self.done = False
        return observe(np.float64(self.x), np.float64(self.v))

    def set_state(self, x: float, v: float) -> np.ndarray:
        self.x, self.v, self.t, self.done = float(x), float(v), 0, False
        return observe(np.float64(self.x), np.float64(self.v))

    def step(self, action) -> StepResult:
        if self.done:
            raise EpisodeOverError("episode finished; call reset() first")
        raw = float(np.asarray(action, dtype=np.float64).reshape(-1)[0])
        a = min(max(raw, -1.0), 1.0)
        x, v, fell, feats = dynamics(np.float64(self.x), np.float64(self.v), np.float64(a))
        self.x, self.v = float(x), float(v)
        self.t += 1
        terminated = bool(fell)
        truncated = not terminated and self.t >= self.max_episode_steps
        self.done = terminated or truncated
        return StepResult(observe(x, v), feats, terminated, truncated, failed=terminated,
                          clamped=a != raw)


class PointRunnerVec:
    """``n`` point-runners advanced in lockstep with numpy; same numbers as
    ``n`` independent ``PointRunner`` instances seeded identically."""

    spec = SPEC

    def __init__(self, n: int, max_episode_steps: int = 200):
        self.n = n
        self.max_episode_steps = max_episode_steps
        self.rngs = [np.random.default_rng(0) for _ in range(n)]
        self.x = np.zeros(n)
        self.v = np.zeros(n)
        self.t = np.zeros(n, dtype=np.int64)

    def _start_speed(self, i: int) -> float:
        return float(self.rngs[i].uniform(-START_SPEED, START_SPEED))

    def reset(self, seeds) -> np.ndarray:
        self.rngs = [np.random.default_rng(int(s)) for s in seeds]
        self.x = np.zeros(self.n)
        self.v = np.array([self._start_speed(i) for i in range(self.n)])
        self.t = np.zeros(self.n, dtype=np.int64)
        return observe(self.x, self.v)

    def step(self, actions) -> VecStep:
        raw = np.asarray(actions, dtype=np.float64).reshape(self.n, -1)[:, 0]
        a = np.clip(raw, -1.0, 1.0)
        x, v, fell, feats = dynamics(self.x, self.v, a)
        self.t += 1
        terminated = fell
        truncated = ~fell & (self.t >= self.max_episode_steps)
        final_obs = observe(x, v)
        done = terminated | truncated
        for i in np.flatnonzero(done):
            x[i] = 0.0
            v[i] = self._start_speed(i)
            self.t[i] = 0
        self.x, self.v = x, v
        return VecStep(observe(x, v), feats, terminated, truncated, fell.copy(), final_obs,
                       {"clamped": a != raw})
