"""Conditional training + condition search versus a longer-trained baseline."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .algorithms import TrainResult, policy_from_checkpoint, train
from .checkpoint import fmt_float
from .config import RunConfig, to_lines
from .envs import make_vec_env
from .hindsight import EvolutionLog, evaluate_fitness, evolve_policy
from .seeding import derive_seed

log = logging.getLogger(__name__)


def eval_seed(seed: int) -> int:
    """Seed shared by every reporting evaluation (eval, sweep, comparisons)."""
    return derive_seed(seed, "eval")


def env_factory(cfg: RunConfig):
    return lambda n: make_vec_env(cfg.env_id, n, **cfg.env_kw)


def config_header(cfg: RunConfig) -> dict[str, str]:
    # the output directory is where the file lives, not part of the run
    return {f"config.{k}": v for k, v in to_lines(cfg) if k != "out"}


def train_conditional(cfg: RunConfig) -> TrainResult:
    res = train(cfg.algo, cfg.space, env_factory(cfg), cfg.seed, conditional=True)
    res.checkpoint.header.update(config_header(cfg))
    return res


def train_baseline(cfg: RunConfig) -> TrainResult:
    """Fixed-reward agent (weights at the range midpoints, no condition
    input) trained for the conditional budget plus the search budget."""
    comp = cfg.baseline_compensation()
    algo = dataclasses.replace(cfg.algo, total_steps=cfg.algo.total_steps + comp)
    res = train(algo, cfg.space, env_factory(cfg), cfg.seed, conditional=False)
    res.checkpoint.header["compensation_steps"] = str(comp)
    res.checkpoint.header.update(config_header(cfg))
    return res


@dataclass
class SeedResult:
    seed: int
    best_by_generation: np.ndarray
    best_condition: np.ndarray
    ga_best_fitness: float          # as logged during the search
    cdrl_fitness: float             # best condition re-scored on the shared eval seed
    baseline_fitness: float         # same FitnessSpec, same eval seed
    compensation_steps: int

    @property
    def boosted(self) -> bool:
        return self.cdrl_fitness >= self.baseline_fitness


@dataclass
class ComparisonReport:
    results: list[SeedResult] = field(default_factory=list)

    @property
    def wins(self) -> int:
        return sum(r.boosted for r in self.results)

    def csv(self) -> str:
        lines = ["seed,ga_best_fitness,cdrl_fitness,baseline_fitness,compensation_steps,"
                 "best_condition"]
        for r in self.results:
            cond = " ".join(fmt_float(x) for x in r.best_condition)
            lines.append(f"{r.seed},{fmt_float(r.ga_best_fitness)},{fmt_float(r.cdrl_fitness)},"
                         f"{fmt_float(r.baseline_fitness)},{r.compensation_steps},{cond}")
        return "\n".join(lines) + "\n"


def compare_seed(cfg: RunConfig) -> tuple[SeedResult, EvolutionLog]:
    cdrl = policy_from_checkpoint(train_conditional(cfg).checkpoint)
    evo = evolve_policy(cdrl, cfg.ga, cfg.fitness, cfg.seed, **cfg.env_kw)
    log.info("seed %d: search best %.4f at %s", cfg.seed, evo.final_best, evo.best_genome)
    base_res = train_baseline(cfg)
    base = policy_from_checkpoint(base_res.checkpoint)
    es = eval_seed(cfg.seed)
    result = SeedResult(
        cfg.seed, evo.best_fitness, evo.best_genome, evo.final_best,
        evaluate_fitness(cdrl, evo.best_genome, cfg.fitness, es, **cfg.env_kw),
        evaluate_fitness(base, None, cfg.fitness, es, **cfg.env_kw),
        cfg.baseline_compensation())
    log.info("seed %d: cdrl %.4f baseline %.4f", cfg.seed, result.cdrl_fitness,
             result.baseline_fitness)
    return result, evo


def compare(cfg: RunConfig, seeds) -> ComparisonReport:
    report = ComparisonReport()
    for s in seeds:
        report.results.append(compare_seed(dataclasses.replace(cfg, seed=int(s)))[0])
    return report
