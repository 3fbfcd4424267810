"""Gridworld with pellets, hazards and an absorbing goal.

Map legend: ``S`` start, ``G`` goal, ``H`` hazard, ``P`` pellet, ``.`` empty.
Actions 0..3 move N/E/S/W; moving into a wall leaves the agent in place.
Observation is a one-hot position followed by a bitmap of remaining pellets.
"""
from __future__ import annotations

import numpy as np

from .base import EnvSpec, EpisodeOverError, StepResult

FEATURES = ("goal", "pellet", "hazard", "time")
MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))

DEFAULT_MAP = (
    "S..H...",
    ".P...P.",
    "...H...",
    ".H...H.",
    "...P...",
    ".P..H..",
    "......G",
)


def parse_map(rows) -> dict:
    if isinstance(rows, str):
        rows = [r for r in rows.replace("/", "\n").split("\n") if r.strip()]
    rows = [r.strip() for r in rows]
    height, width = len(rows), len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("grid map rows must have equal length")
    cells = {"S": [], "G": [], "H": [], "P": []}
    for i, row in enumerate(rows):
        for j, ch in enumerate(row):
            if ch in cells:
                cells[ch].append((i, j))
            elif ch != ".":
                raise ValueError(f"unknown map symbol {ch!r}")
    if len(cells["S"]) != 1 or len(cells["G"]) != 1:
        raise ValueError("map needs exactly one S and one G")
    return {"height": height, "width": width, "start": cells["S"][0], "goal": cells["G"][0],
            "hazards": frozenset(cells["H"]), "pellets": tuple(cells["P"])}


def transition(layout: dict, pos: tuple[int, int], action: int) -> tuple[int, int]:
    di, dj = MOVES[action]
    i, j = pos[0] + di, pos[1] + dj
    if 0 <= i < layout["height"] and 0 <= j < layout["width"]:
        return (i, j)
    return pos


class GridCollect:
    def __init__(self, rows=DEFAULT_MAP, max_episode_steps: int = 100):
        self.layout = parse_map(rows)
        self.max_episode_steps = max_episode_steps
        n_cells = self.layout["height"] * self.layout["width"]
        self.spec = EnvSpec("grid-collect", obs_dim=n_cells + len(self.layout["pellets"]),
                            feature_names=FEATURES, max_episode_steps=max_episode_steps,
                            action_kind="discrete", action_dim=1, n_actions=4)
        self.pos = self.layout["start"]
        self.remaining = [True] * len(self.layout["pellets"])
        self.t = 0
        self.done = True

    def _obs(self) -> np.ndarray:
        h, w = self.layout["height"], self.layout["width"]
        obs = np.zeros(h * w + len(self.remaining))
        obs[self.pos[0] * w + self.pos[1]] = 1.0
        obs[h * w:] = self.remaining
        return obs

    def reset(self, seed: int | None = None) -> np.ndarray:
        self.pos = self.layout["start"]
        self.remaining = [True] * len(self.layout["pellets"])
        self.t = 0
        self.done = False
        return self._obs()

    def step(self, action) -> StepResult:
        if self.done:
            raise EpisodeOverError("episode finished; call reset() first")
        action = int(action)
        if not 0 <= action < 4:
            raise ValueError(f"action {action} outside 0..3")
        self.pos = transition(self.layout, self.pos, action)
        feats = np.array([0.0, 0.0, 0.0, -1.0])
        if self.pos in self.layout["pellets"]:
            k = self.layout["pellets"].index(self.pos)
            if self.remaining[k]:
                self.remaining[k] = False
                feats[1] = 1.0
        if self.pos in self.layout["hazards"]:
            feats[2] = -1.0
        terminated = self.pos == self.layout["goal"]
        if terminated:
            feats[0] = 1.0
        self.t += 1
        truncated = not terminated and self.t >= self.max_episode_steps
        self.done = terminated or truncated
        return StepResult(self._obs(), feats, terminated, truncated)
