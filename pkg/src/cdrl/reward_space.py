"""Anchored reward-parameter space and its affine map to condition space.

The full reward weight vector is the anchor weight ``xi`` (at ``anchor_index``)
plus ``N-1`` free weights. Each free weight has a range ``[lo, hi]``; the
affine map sends that range onto ``[-1, 1]`` and extends linearly outside it,
so search-time conditions beyond the training box stay meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Condition = np.ndarray
FeatureVector = np.ndarray


@dataclass(frozen=True)
class RewardSpace:
    feature_names: tuple[str, ...]
    ranges: tuple[tuple[float, float], ...]
    anchor_weight: float = 1.0
    anchor_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "ranges", tuple((float(lo), float(hi)) for lo, hi in self.ranges))
        n = len(self.feature_names)
        if n < 1:
            raise ValueError("reward space needs at least the anchor feature")
        if len(self.ranges) != n - 1:
            raise ValueError(f"expected {n - 1} ranges for {n} features, got {len(self.ranges)}")
        for i, (lo, hi) in enumerate(self.ranges):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"range {i} must be finite with lo < hi, got [{lo}, {hi}]")
        if not np.isfinite(self.anchor_weight):
            raise ValueError("anchor weight must be finite")
        if not 0 <= self.anchor_index < n:
            raise ValueError(f"anchor index {self.anchor_index} out of range for {n} features")

    @classmethod
    def from_epsilon(cls, feature_names, epsilon: float, anchor_weight: float = 1.0,
                     anchor_index: int = 0) -> "RewardSpace":
        """Every free weight varies in ``[1 - epsilon, 1 + epsilon]``."""
        n = len(feature_names)
        return cls(tuple(feature_names), ((1.0 - epsilon, 1.0 + epsilon),) * (n - 1),
                   anchor_weight, anchor_index)

    @property
    def feature_dim(self) -> int:
        return len(self.feature_names)

    @property
    def condition_dim(self) -> int:
        return len(self.feature_names) - 1

    @property
    def lo(self) -> np.ndarray:
        return np.array([r[0] for r in self.ranges])

    @property
    def hi(self) -> np.ndarray:
        return np.array([r[1] for r in self.ranges])

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


def _check(space: RewardSpace, x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (space.condition_dim,):
        raise ValueError(f"{what} has length {x.shape[-1:]}, expected {space.condition_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} must be finite")
    return x


def to_condition(space: RewardSpace, omega) -> Condition:
    omega = _check(space, omega, "free reward weights")
    lo, hi = space.lo, space.hi
    return 2.0 * (omega - lo) / (hi - lo) - 1.0


def from_condition(space: RewardSpace, c) -> np.ndarray:
    c = _check(space, c, "condition")
    lo, hi = space.lo, space.hi
    return lo + 0.5 * (c + 1.0) * (hi - lo)


def reward_weights(space: RewardSpace, c) -> np.ndarray:
    """Full weight vector ``[xi; M^-1(c)]`` (batched over leading axes)."""
    omega = from_condition(space, c)
    return np.insert(omega, space.anchor_index, space.anchor_weight, axis=-1)


def conditional_reward(space: RewardSpace, c, phi) -> float | np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape[-1:] != (space.feature_dim,):
        raise ValueError(f"feature vector has length {phi.shape[-1:]}, expected {space.feature_dim}")
    r = np.sum(reward_weights(space, c) * phi, axis=-1)
    return float(r) if np.ndim(r) == 0 else r


def sample_conditions(space: RewardSpace, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform draws over ``[-1, 1]^(N-1)``, shape ``(n, N-1)``."""
    if n < 1:
        raise ValueError("need at least one condition")
    return rng.uniform(-1.0, 1.0, size=(n, space.condition_dim))


@dataclass
class RefreshSchedule:
    period: int
    counter: int = 0

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("refresh period must be positive")


def refresh_tick(sched: RefreshSchedule) -> bool:
    sched.counter += 1
    return sched.counter % sched.period == 0
