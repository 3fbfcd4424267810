"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .algorithms import LOG_COLUMNS, policy_from_checkpoint
from .checkpoint import CheckpointError, atomic_write, dumps, fmt_float, load
from .compare import eval_seed, train_baseline, train_conditional
from .config import ConfigError, RunConfig
from .hindsight import episode_seeds, evaluate_episodes, evaluate_many, evolve_policy, \
    fitness_from_episodes

MAX_SWEEP_DIMS = 3


def log_csv(rows: list[dict]) -> str:
    lines = [",".join(LOG_COLUMNS)]
    for row in rows:
        cells = []
        for key in LOG_COLUMNS:
            v = row.get(key)
            cells.append("" if v is None else (str(v) if isinstance(v, int) else fmt_float(v)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _overrides(args) -> list[str]:
    extra = list(args.override or [])
    if args.seed is not None:
        extra.append(f"seed={args.seed}")
    if args.out is not None:
        extra.append(f"out={args.out}")
    return extra


def _run_config(args) -> RunConfig:
    return config_mod.load(args.config, _overrides(args))


def _checkpoint_config(ckpt, args) -> RunConfig:
    """Config for eval-style commands: ``--config`` if given, else the echo
    stored in the checkpoint."""
    if args.config:
        return _run_config(args)
    echo = {k[len("config."):]: v for k, v in ckpt.header.items() if k.startswith("config.")}
    if not echo:
        raise ConfigError("config", "checkpoint carries no config echo; pass --config")
    return config_mod.build(config_mod.apply_overrides(echo, _overrides(args)))


def _parse_condition(text: str, dim: int) -> np.ndarray:
    try:
        c = np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        raise ConfigError("--condition", f"expected comma-separated numbers, got {text!r}") from None
    if c.size != dim:
        raise ConfigError("--condition", f"expected {dim} values (N-1), got {c.size}")
    return c


def parse_grid(text: str) -> list[np.ndarray]:
    """``lo:hi:n`` per dimension, comma separated."""
    axes = []
    for item in text.split(","):
        try:
            lo, hi, n = item.split(":")
            axes.append(np.linspace(float(lo), float(hi), int(n)))
        except ValueError:
            raise ConfigError("--grid", f"expected lo:hi:n per dimension, got {item!r}") from None
        if int(n) < 1:
            raise ConfigError("--grid", "each dimension needs at least one point")
    if len(axes) > MAX_SWEEP_DIMS:
        raise ConfigError("--grid", f"sweeps over more than {MAX_SWEEP_DIMS} dimensions are "
                                    f"refused (got {len(axes)})")
    return axes


def cmd_train(args) -> int:
    cfg = _run_config(args)
    res = train_conditional(cfg)
    out = Path(cfg.out)
    atomic_write(out / "checkpoint.txt", dumps(res.checkpoint))
    atomic_write(out / "train_log.csv", log_csv(res.log))
    last = res.log[-1]["mean_eval_fitness"] if res.log else float("nan")
    print(f"trained {cfg.algo.algorithm} on {cfg.env_id}: steps={res.agent_steps} "
          f"updates={res.updates} eval_fitness={last:.4f} -> {out}")
    return 0


def cmd_train_baseline(args) -> int:
    cfg = _run_config(args)
    res = train_baseline(cfg)
    out = Path(cfg.out)
    atomic_write(out / "baseline_checkpoint.txt", dumps(res.checkpoint))
    atomic_write(out / "baseline_log.csv", log_csv(res.log))
    print(f"baseline {cfg.algo.algorithm} on {cfg.env_id}: steps={res.agent_steps} "
          f"(compensation {cfg.baseline_compensation()}) -> {out}")
    return 0


def cmd_evolve(args) -> int:
    ckpt = load(args.checkpoint)
    cfg = _checkpoint_config(ckpt, args)
    policy = policy_from_checkpoint(ckpt)
    if not policy.conditional:
        raise ConfigError("--checkpoint", "condition search needs a conditional checkpoint "
                                          "(output of `train`, not `train-baseline`)")
    evo = evolve_policy(policy, cfg.ga, cfg.fitness, cfg.seed, **cfg.env_kw)
    out = Path(cfg.out)
    atomic_write(out / "evolution.csv", evo.population_csv())
    atomic_write(out / "evolution_summary.csv", evo.summary_csv())
    cond = ",".join(fmt_float(x) for x in evo.best_genome)
    print(f"best fitness {evo.final_best:.4f} at condition {cond} -> {out}")
    return 0


def _fitness_spec(cfg: RunConfig, args):
    if args.episodes is None:
        return cfg.fitness
    if args.episodes < 1:
        raise ConfigError("--episodes", "must be positive")
    return dataclasses.replace(cfg.fitness, episodes=args.episodes)


def cmd_eval(args) -> int:
    ckpt = load(args.checkpoint)
    cfg = _checkpoint_config(ckpt, args)
    policy = policy_from_checkpoint(ckpt)
    spec = _fitness_spec(cfg, args)
    c = None
    if policy.conditional:
        c = _parse_condition(args.condition or ",".join(["0"] * policy.condition_dim),
                             policy.condition_dim)
    elif args.condition:
        raise ConfigError("--condition", "this checkpoint takes no condition (N-1 = 0 inputs)")
    seed = eval_seed(cfg.seed)
    dist, fell = evaluate_episodes(policy, c, spec, seed, **cfg.env_kw)
    fitness = fitness_from_episodes(dist, fell, spec.max_failure_fraction)
    lines = ["episode,seed,distance,fell"]
    for k, (s, d, f) in enumerate(zip(episode_seeds(seed, spec.episodes), dist, fell)):
        lines.append(f"{k},{s},{fmt_float(d)},{int(f)}")
    atomic_write(Path(cfg.out) / "eval_episodes.csv", "\n".join(lines) + "\n")
    print(f"fitness {fmt_float(fitness)} ({int(fell.sum())}/{spec.episodes} fell)")
    return 0


def cmd_sweep(args) -> int:
    ckpt = load(args.checkpoint)
    cfg = _checkpoint_config(ckpt, args)
    policy = policy_from_checkpoint(ckpt)
    if not policy.conditional:
        raise ConfigError("--checkpoint", "sweeps need a conditional checkpoint")
    axes = parse_grid(args.grid)
    if len(axes) != policy.condition_dim:
        raise ConfigError("--grid", f"expected {policy.condition_dim} dimensions (N-1), "
                                    f"got {len(axes)}")
    spec = _fitness_spec(cfg, args)
    points = np.array(list(itertools.product(*axes)), dtype=np.float64)
    seed = eval_seed(cfg.seed)
    fit = evaluate_many(policy, points, [seed] * len(points), spec, **cfg.env_kw)
    header = ",".join([f"c_{j}" for j in range(points.shape[1])] + ["fitness"])
    rows = [",".join(fmt_float(x) for x in (*p, f)) for p, f in zip(points, fit)]
    atomic_write(Path(cfg.out) / "sweep.csv", "\n".join([header] + rows) + "\n")
    print(f"swept {len(points)} conditions: fitness {fit.min():.4f} .. {fit.max():.4f}")
    return 0


COMMANDS = {"train": cmd_train, "train-baseline": cmd_train_baseline, "evolve": cmd_evolve,
            "eval": cmd_eval, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdrl", description="conditional reward RL with "
                                                         "post-training condition search")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        needs_config = name in ("train", "train-baseline")
        s.add_argument("--config", required=needs_config,
                       help="config file or bundled name " f"({', '.join(config_mod.bundled_names())})")
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.add_argument("--override", action="append", metavar="KEY=VALUE")
        if not needs_config:
            s.add_argument("--checkpoint", required=True)
        if name in ("eval", "sweep"):
            s.add_argument("--episodes", type=int)
        if name == "eval":
            s.add_argument("--condition", help="comma-separated condition, N-1 values")
        if name == "sweep":
            s.add_argument("--grid", required=True, help="lo:hi:n per dimension, comma separated")
    return p


def _join_values(argv):
    """Glue ``--grid -1:1:5`` into ``--grid=-1:1:5`` so argparse does not
    mistake a leading minus for a flag."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--grid", "--condition"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CheckpointError, KeyError, ValueError, OSError, FloatingPointError,
            RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
