import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrl import config
from cdrl.config import ConfigError


def test_bundled_configs_load():
    assert {"point-runner-ppo", "point-runner-ddpg", "grid-collect-dqn"} <= set(
        config.bundled_names())
    for name in config.bundled_names():
        cfg = config.load(name)
        assert cfg.space.feature_dim == len(cfg.space.feature_names)
        assert cfg.ga.dim == cfg.space.condition_dim


def test_epsilon_expands_exactly():
    cfg = config.load("point-runner-ppo")
    assert cfg.space.ranges == ((0.8, 1.2), (0.8, 1.2))


@pytest.mark.parametrize("name", ["point-runner-ppo", "point-runner-ddpg", "grid-collect-dqn",
                                  "chain-mdp-dqn"])
def test_round_trip(name):
    cfg = config.load(name, ["seed=12345678901234567890", "ga.mutation_scale=0.3,0.1"]
                      if name.startswith("point") else ["seed=5"])
    again = config.loads(config.dumps(cfg))
    assert again == cfg
    assert config.dumps(again) == config.dumps(cfg)


@settings(max_examples=30, deadline=None)
@given(eps=st.floats(0.01, 0.99), seed=st.integers(0, 2**64 - 1), pop=st.integers(2, 200),
       steps=st.integers(1, 5000), lr=st.floats(1e-6, 1.0))
def test_round_trip_property(eps, seed, pop, steps, lr):
    cfg = config.load("point-runner-ppo", [f"reward_space.epsilon={eps!r}", f"seed={seed}",
                                           f"ga.population={pop}", f"fitness.steps={steps}",
                                           f"algo.lr_policy={lr!r}"])
    assert config.loads(config.dumps(cfg)) == cfg


def test_missing_ranges_names_the_field():
    text = config.resolve("point-runner-ppo").replace("reward_space.epsilon = 0.2\n", "")
    with pytest.raises(ConfigError) as err:
        config.loads(text)
    assert err.value.path == "reward_space.ranges"
    assert "reward_space.ranges" in str(err.value)


@pytest.mark.parametrize("override,path", [
    ("algo.bogus=1", "algo.bogus"),
    ("mystery=3", "mystery"),
    ("env.id=cartpole", "env.id"),
    ("algo.n_envs=two", "algo.n_envs"),
    ("ga.bounds=-1:1", "ga.bounds"),
    ("reward_space.features=a,b", "reward_space.features"),
    ("reward_space.ranges=0:1,0:1", "reward_space.ranges"),
    ("seed=-1", "seed"),
])
def test_bad_values_name_their_path(override, path):
    with pytest.raises(ConfigError) as err:
        config.load("point-runner-ppo", [override])
    assert err.value.path == path


def test_overrides_win_and_compensation():
    cfg = config.load("point-runner-ppo", ["seed=7", "fitness.episodes=10"])
    assert cfg.seed == 7 and cfg.fitness.episodes == 10
    assert cfg.baseline_compensation() == 30 * 50 * 10 * 200
    lit = dataclasses.replace(cfg, compensation_steps=30_000)
    assert lit.baseline_compensation() == 30_000
    assert config.loads(config.dumps(lit)).compensation_steps == 30_000


def test_grid_map_and_unknown_file():
    cfg = config.load("grid-collect-dqn", ["env.grid_map=S.P/.HG"])
    assert cfg.grid_map == ("S.P", ".HG")
    assert config.loads(config.dumps(cfg)).grid_map == cfg.grid_map
    with pytest.raises(ConfigError):
        config.load("no-such-config")
    with pytest.raises(ConfigError):
        config.loads("env.id point-runner")
