from __future__ import annotations

from dataclasses import dataclass

ALGORITHMS = ("ppo", "ddpg", "dqn")


@dataclass
class AlgoConfig:
    """Hyperparameters for the three conditional learners.

    ``refresh_period`` counts policy updates for PPO and agent steps for the
    off-policy learners. Defaults are desk-scale PPO settings.
    """

    algorithm: str = "ppo"
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip: float = 0.2
    entropy_coef: float = 0.0
    lr_policy: float = 3e-4
    lr_value: float = 3e-4
    hidden_sizes: tuple[int, ...] = (64, 64)
    activation: str = "tanh"
    layer_norm: bool = False
    n_envs: int = 8
    horizon: int = 256
    minibatches: int = 4
    epochs: int = 16
    refresh_period: int = 10
    batch_size: int = 128
    replay_capacity: int = 100_000
    learning_starts: int = 1000
    train_every: int = 100
    gradient_steps: int = 50
    soft_update: float = 0.001
    target_update_interval: int = 250
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_fraction: float = 0.5
    total_steps: int = 200_000
    eval_every: int = 8192
    eval_episodes: int = 8

    def validate(self) -> list[tuple[str, str]]:
        """Problems as ``(field, message)`` pairs; empty when valid."""
        errs = []
        if self.algorithm not in ALGORITHMS:
            errs.append(("algorithm", f"must be one of {', '.join(ALGORITHMS)}"))
        if not 0.0 <= self.gamma < 1.0:
            errs.append(("gamma", "must lie in [0, 1)"))
        if not 0.0 <= self.gae_lambda <= 1.0:
            errs.append(("gae_lambda", "must lie in [0, 1]"))
        if self.clip <= 0:
            errs.append(("clip", "must be positive"))
        for name in ("lr_policy", "lr_value"):
            if getattr(self, name) <= 0:
                errs.append((name, "must be positive"))
        for name in ("n_envs", "horizon", "minibatches", "epochs", "refresh_period", "batch_size",
                     "replay_capacity", "train_every", "gradient_steps", "target_update_interval",
                     "eval_every", "eval_episodes"):
            if getattr(self, name) < 1:
                errs.append((name, "must be a positive count"))
        if self.total_steps < 0 or self.learning_starts < 0:
            errs.append(("total_steps", "must be non-negative"))
        if any(n < 1 for n in self.hidden_sizes):
            errs.append(("hidden_sizes", "layer widths must be positive"))
        if not 0.0 <= self.soft_update <= 1.0:
            errs.append(("soft_update", "must lie in [0, 1]"))
        if not 0.0 < self.ou_theta <= 1.0 or self.ou_sigma < 0:
            errs.append(("ou_theta", "need 0 < ou_theta <= 1 and ou_sigma >= 0"))
        for name in ("epsilon_start", "epsilon_end", "epsilon_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                errs.append((name, "must lie in [0, 1]"))
        if self.activation not in ("tanh", "relu", "identity"):
            errs.append(("activation", "must be tanh, relu or identity"))
        return errs
