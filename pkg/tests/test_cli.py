import re

import numpy as np
import pytest

from cdrl import config
from cdrl.algorithms import policy_from_checkpoint
from cdrl.checkpoint import load
from cdrl.cli import main, parse_grid
from cdrl.compare import eval_seed
from cdrl.config import ConfigError
from cdrl.hindsight import evaluate_fitness

TINY = ["algo.total_steps=512", "algo.n_envs=2", "algo.horizon=64", "algo.epochs=2",
        "algo.hidden_sizes=8", "algo.eval_every=256", "algo.eval_episodes=2",
        "ga.population=4", "ga.generations=3", "fitness.episodes=3", "fitness.steps=30"]


def printed_fitness(text):
    return float(re.search(r"fitness (\S+)", text).group(1))


def run(*argv):
    return main([str(a) for a in argv])


def tiny_args(out, *extra):
    args = ["--config", "point-runner-ppo", "--out", out]
    for o in TINY + list(extra):
        args += ["--override", o]
    return args


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert run("train", *tiny_args(out)) == 0
    return out


def test_train_outputs_and_determinism(trained, tmp_path):
    assert (trained / "checkpoint.txt").is_file() and (trained / "train_log.csv").is_file()
    again = tmp_path / "again"
    assert run("train", *tiny_args(again)) == 0
    for name in ("checkpoint.txt", "train_log.csv"):
        assert (again / name).read_bytes() == (trained / name).read_bytes()


def test_seed_override_twice_gives_identical_files(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("train", *tiny_args(a, "seed=7")) == 0
    assert run("train", *tiny_args(b, "seed=7")) == 0
    assert (a / "checkpoint.txt").read_bytes() == (b / "checkpoint.txt").read_bytes()
    assert (a / "train_log.csv").read_bytes() == (b / "train_log.csv").read_bytes()


def test_zero_budget_writes_initial_network(tmp_path):
    assert run("train", *tiny_args(tmp_path, "algo.total_steps=0")) == 0
    ckpt = load(tmp_path / "checkpoint.txt")
    assert ckpt.header["conditional"] == "true"
    assert (tmp_path / "train_log.csv").read_text().count("\n") == 1


def test_config_errors_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(config.resolve("point-runner-ppo").replace("reward_space.epsilon = 0.2\n", ""))
    assert run("train", "--config", cfg, "--out", tmp_path) == 2
    assert "reward_space.ranges" in capsys.readouterr().err
    assert run("train", *tiny_args(tmp_path, "algo.nope=1")) == 2


def test_runtime_errors_exit_3(tmp_path):
    assert run("eval", "--checkpoint", tmp_path / "missing.txt") == 3
    bad = tmp_path / "bad.txt"
    bad.write_text("algorithm=ppo\n")
    assert run("eval", "--checkpoint", bad) == 3


def test_baseline_header_and_width(tmp_path):
    assert run("train-baseline", *tiny_args(tmp_path)) == 0
    ckpt = load(tmp_path / "baseline_checkpoint.txt")
    assert ckpt.header["conditional"] == "false"
    assert int(ckpt.header["compensation_steps"]) == 3 * 4 * 3 * 30
    pol = policy_from_checkpoint(ckpt)
    assert pol.input_dim == pol.obs_dim
    assert pol.networks["policy"].layer_sizes[0] == pol.obs_dim
    # a baseline checkpoint cannot be searched over
    assert run("evolve", "--checkpoint", tmp_path / "baseline_checkpoint.txt",
               "--out", tmp_path) == 2


def test_evolve_rows_monotone_and_reproducible(trained, tmp_path):
    ck = trained / "checkpoint.txt"
    assert run("evolve", "--checkpoint", ck, "--out", tmp_path / "a") == 0
    assert run("evolve", "--checkpoint", ck, "--out", tmp_path / "b") == 0
    pop = (tmp_path / "a" / "evolution.csv").read_text().splitlines()
    assert len(pop) == 1 + 3 * 4
    summary = np.loadtxt(tmp_path / "a" / "evolution_summary.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(summary[:, 1]) >= 0)
    for name in ("evolution.csv", "evolution_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_eval_matches_library_and_checks_arity(trained, tmp_path, capsys):
    ck = trained / "checkpoint.txt"
    assert run("eval", "--checkpoint", ck, "--condition", "0,0", "--out", tmp_path) == 0
    rows = (tmp_path / "eval_episodes.csv").read_text().splitlines()
    assert rows[0] == "episode,seed,distance,fell" and len(rows) == 1 + 3
    cfg = config.load("point-runner-ppo", TINY)
    pol = policy_from_checkpoint(load(ck))
    want = evaluate_fitness(pol, [0.0, 0.0], cfg.fitness, eval_seed(cfg.seed))
    assert printed_fitness(capsys.readouterr().out) == want
    assert run("eval", "--checkpoint", ck, "--condition", "0.1", "--out", tmp_path) == 2
    assert "N-1" in capsys.readouterr().err


def test_sweep_shapes(trained, tmp_path, capsys):
    ck = trained / "checkpoint.txt"
    assert run("sweep", "--checkpoint", ck, "--grid", "-0.5:-0.5:1,0.25:0.25:1",
               "--out", tmp_path / "one") == 0
    one = (tmp_path / "one" / "sweep.csv").read_text().splitlines()
    assert len(one) == 2
    capsys.readouterr()
    assert run("eval", "--checkpoint", ck, "--condition", "-0.5,0.25",
               "--out", tmp_path / "one") == 0
    assert float(one[1].split(",")[-1]) == printed_fitness(capsys.readouterr().out)

    assert run("sweep", "--checkpoint", ck, "--grid", "-1:1:5,-1:1:5", "--out", tmp_path) == 0
    grid = np.loadtxt(tmp_path / "sweep.csv", delimiter=",", skiprows=1)
    assert grid.shape == (25, 3)
    axis = np.linspace(-1, 1, 5)
    np.testing.assert_array_equal(grid[:, 0], np.repeat(axis, 5))
    np.testing.assert_array_equal(grid[:, 1], np.tile(axis, 5))
    assert run("sweep", "--checkpoint", ck, "--grid", "-1:1:2", "--out", tmp_path) == 2


def test_grid_guard():
    assert len(parse_grid("0:1:2,0:1:2,0:1:2")) == 3
    with pytest.raises(ConfigError):
        parse_grid("0:1:2,0:1:2,0:1:2,0:1:2")
    with pytest.raises(ConfigError):
        parse_grid("0:1")
