"""Deterministic tabular MDPs, value iteration, and the chain-with-shortcut task."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import EnvSpec, EpisodeOverError, StepResult

FEATURES = ("goal", "risk", "time")


@dataclass(frozen=True)
class TabularMdp:
    next_state: np.ndarray  # (S, A) ints
    features: np.ndarray  # (S, A, N)
    terminal: frozenset
    start: int = 0
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        s, a = self.next_state.shape
        if self.features.shape[:2] != (s, a):
            raise ValueError("feature table must be (S, A, N)")
        if np.any(self.next_state < 0) or np.any(self.next_state >= s):
            raise ValueError("transition leaves the state space")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")

    @property
    def n_states(self) -> int:
        return self.next_state.shape[0]

    @property
    def n_actions(self) -> int:
        return self.next_state.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[2]

    def nonterminal_states(self) -> list[int]:
        return [s for s in range(self.n_states) if s not in self.terminal]


def q_values(mdp: TabularMdp, weights, values: np.ndarray, gamma: float) -> np.ndarray:
    r = mdp.features @ np.asarray(weights, dtype=np.float64)
    return r + gamma * values[mdp.next_state]


def greedy(q: np.ndarray, tie_tol: float = 1e-12) -> np.ndarray:
    """Argmax per row, ties (within ``tie_tol``) going to the lowest index."""
    return np.argmax(q >= q.max(axis=-1, keepdims=True) - tie_tol, axis=-1)


def value_iteration(mdp: TabularMdp, weights, gamma: float, tol: float = 1e-10):
    """Optimal values and greedy policy under reward ``weights . phi(s, a)``.

    Terminal states have value 0. Stops once a sweep changes values by at most
    ``tol (1 - gamma)``, which bounds both the distance to the fixed point and
    the Bellman residual of the returned values by ``tol``.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (mdp.feature_dim,) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite with one entry per feature")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    term = np.zeros(mdp.n_states, dtype=bool)
    term[list(mdp.terminal)] = True
    values = np.zeros(mdp.n_states)
    while True:
        new = np.where(term, 0.0, q_values(mdp, weights, values, gamma).max(axis=1))
        delta = np.max(np.abs(new - values))
        values = new
        if delta <= tol * (1.0 - gamma):
            break
    policy = greedy(q_values(mdp, weights, values, gamma))
    return values, policy


def bellman_residual(mdp: TabularMdp, weights, values: np.ndarray, gamma: float) -> float:
    q = q_values(mdp, weights, values, gamma)
    backed = q.max(axis=1)
    backed[list(mdp.terminal)] = 0.0
    return float(np.max(np.abs(backed - values)))


MUD = (1, 1, 3, 3, 3, 1, 1)
SHORTCUT_FROM, SHORTCUT_TO = 2, 6


def chain_mdp() -> TabularMdp:
    """8-state chain; state 7 is the absorbing goal.

    Action 0 walks one state forward and takes ``MUD[s]`` time units. Action 1
    hops two states forward through a risky gap (risk 1, time 1); from the
    shortcut state it instead jumps straight past the mud to state 6.
    """
    n = 8
    nxt = np.zeros((n, 2), dtype=np.int64)
    feats = np.zeros((n, 2, 3))
    for s in range(n - 1):
        nxt[s, 0] = s + 1
        feats[s, 0] = (float(s + 1 == n - 1), 0.0, MUD[s])
        hop = SHORTCUT_TO if s == SHORTCUT_FROM else min(s + 2, n - 1)
        nxt[s, 1] = hop
        feats[s, 1] = (float(hop == n - 1), 1.0, 1.0)
    nxt[n - 1] = n - 1
    return TabularMdp(nxt, feats, frozenset({n - 1}), 0, FEATURES)


class TabularEnv:
    """Episodic wrapper; observation is the one-hot state."""

    def __init__(self, mdp: TabularMdp | None = None, max_episode_steps: int = 20,
                 env_id: str = "chain-mdp"):
        self.mdp = mdp if mdp is not None else chain_mdp()
        self.max_episode_steps = max_episode_steps
        self.spec = EnvSpec(env_id, obs_dim=self.mdp.n_states,
                            feature_names=self.mdp.feature_names or
                            tuple(f"f{i}" for i in range(self.mdp.feature_dim)),
                            max_episode_steps=max_episode_steps, action_kind="discrete",
                            action_dim=1, n_actions=self.mdp.n_actions)
        self.state = self.mdp.start
        self.t = 0
        self.done = True

    def _obs(self) -> np.ndarray:
        obs = np.zeros(self.mdp.n_states)
        obs[self.state] = 1.0
        return obs

    def reset(self, seed: int | None = None) -> np.ndarray:
        self.state = self.mdp.start
        self.t = 0
        self.done = False
        return self._obs()

    def step(self, action) -> StepResult:
        if self.done:
            raise EpisodeOverError("episode finished; call reset() first")
        a = int(action)
        feats = self.mdp.features[self.state, a].copy()
        self.state = int(self.mdp.next_state[self.state, a])
        self.t += 1
        terminated = self.state in self.mdp.terminal
        truncated = not terminated and self.t >= self.max_episode_steps
        self.done = terminated or truncated
        return StepResult(self._obs(), feats, terminated, truncated)
