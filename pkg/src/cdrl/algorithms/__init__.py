"""Conditional PPO, DDPG and DQN driven by a reward-randomized outer loop."""
from .common import (ReplayBuffer, concat_condition, ddpg_targets, dqn_targets, epsilon_greedy,
                     gae_advantages, ou_noise_step, soft_update)
from .config import AlgoConfig
from .policies import Policy, policy_from_checkpoint
from .train import LOG_COLUMNS, TrainResult, train
