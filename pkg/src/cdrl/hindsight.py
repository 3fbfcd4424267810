"""Post-training search over the condition space of a frozen policy.

A real-valued GA (tournament selection, single-point crossover, bounded
Gaussian mutation, elitism) looks for the condition whose policy runs
furthest. Nothing is retrained; only the network input changes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algorithms.policies import Policy
from .checkpoint import fmt_float
from .envs.rollout import rollout_distances
from .seeding import derive_seed

log = logging.getLogger(__name__)


class EvolutionError(RuntimeError):
    def __init__(self, generation: int, individual: int, cause: Exception):
        super().__init__(f"fitness evaluation failed at generation {generation}, "
                         f"individual {individual}: {cause}")
        self.generation, self.individual = generation, individual


@dataclass(frozen=True)
class FitnessSpec:
    episodes: int = 20
    steps: int = 200
    max_failure_fraction: float = 0.2

    def __post_init__(self):
        if self.episodes < 1 or self.steps < 1:
            raise ValueError("episodes and steps must be positive")
        if not 0.0 < self.max_failure_fraction <= 1.0:
            raise ValueError("max_failure_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class GaConfig:
    population: int = 50
    generations: int = 30
    tournament_size: int = 3
    crossover_prob: float = 0.8
    mutation_prob: float = 0.1
    mutation_scale: tuple[float, ...] | None = None   # None: 5% of each bound width
    elite_count: int = 1
    bounds: tuple[tuple[float, float], ...] = ((-2.0, 2.0), (-2.0, 2.0))

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.generations < 1 or self.tournament_size < 1:
            raise ValueError("generations and tournament_size must be at least 1")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0 <= self.elite_count < self.population:
            raise ValueError("elite_count must be in [0, population)")
        if not self.bounds or any(not lo < hi for lo, hi in self.bounds):
            raise ValueError("every search bound needs lo < hi")
        if self.mutation_scale is not None:
            if len(self.mutation_scale) != len(self.bounds) or min(self.mutation_scale) <= 0:
                raise ValueError("mutation_scale needs one positive entry per bound")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds], dtype=np.float64)

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds], dtype=np.float64)

    @property
    def sigma(self) -> np.ndarray:
        if self.mutation_scale is None:
            return 0.05 * (self.hi - self.lo)
        return np.asarray(self.mutation_scale, dtype=np.float64)


def ga_step_budget(ga: GaConfig, fit: FitnessSpec) -> int:
    """Upper bound on environment steps one evolution run consumes."""
    return ga.generations * ga.population * fit.episodes * fit.steps


# ---------------------------------------------------------------- fitness

def episode_seeds(seed: int, episodes: int) -> list[int]:
    return [derive_seed(seed, "episode", k) for k in range(episodes)]


def fitness_from_episodes(distances, fell, max_failure_fraction: float) -> float:
    distances = np.asarray(distances, dtype=np.float64)
    fell = np.asarray(fell, dtype=bool)
    if not np.all(np.isfinite(distances)):
        raise FloatingPointError("non-finite episode distance")
    if fell.mean() > max_failure_fraction or fell.all():
        return 0.0
    return float(distances[~fell].mean())


def _conditioned(policy: Policy, conds: np.ndarray) -> Callable:
    if not policy.conditional:
        return policy.act
    return lambda obs: policy.act(np.concatenate([obs, conds], axis=1))


def evaluate_episodes(policy: Policy, c, spec: FitnessSpec, seed: int, **env_kw):
    """Per-episode ``(distances, fell)`` for ``policy`` held at condition ``c``
    (ignored for a non-conditional policy)."""
    if policy.conditional:
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (policy.condition_dim,):
            raise ValueError(f"condition must have {policy.condition_dim} entries (N-1), "
                             f"got {c.size}")
        conds = np.tile(c, (spec.episodes, 1))
    else:
        conds = np.zeros((spec.episodes, 0))
    return rollout_distances(_conditioned(policy, conds), spec.steps,
                             episode_seeds(seed, spec.episodes), policy.env_id, **env_kw)


def evaluate_fitness(policy: Policy, c, spec: FitnessSpec, seed: int, **env_kw) -> float:
    """Mean forward distance over surviving episodes; 0 when too many fell."""
    dist, fell = evaluate_episodes(policy, c, spec, seed, **env_kw)
    return fitness_from_episodes(dist, fell, spec.max_failure_fraction)


def evaluate_many(policy: Policy, genomes: np.ndarray, seeds: Sequence[int], spec: FitnessSpec,
                  **env_kw) -> np.ndarray:
    """Fitness of several conditions at once, each with its own evaluation
    seed; all episodes of all conditions run in one lockstep batch."""
    genomes = np.atleast_2d(np.asarray(genomes, dtype=np.float64))
    k, E = len(genomes), spec.episodes
    if genomes.shape[1] != policy.condition_dim:
        raise ValueError(f"conditions must have {policy.condition_dim} entries (N-1)")
    conds = np.repeat(genomes, E, axis=0)
    run_seeds = [s for seed in seeds for s in episode_seeds(seed, E)]
    dist, fell = rollout_distances(_conditioned(policy, conds), spec.steps, run_seeds,
                                   policy.env_id, **env_kw)
    dist, fell = dist.reshape(k, E), fell.reshape(k, E)
    return np.array([fitness_from_episodes(dist[i], fell[i], spec.max_failure_fraction)
                     for i in range(k)])


# ---------------------------------------------------------------- GA operators

@dataclass
class Individual:
    genome: np.ndarray
    fitness: float | None = None

    def copy(self) -> "Individual":
        return Individual(self.genome.copy(), self.fitness)


def tournament_winner(population: Sequence[Individual], drawn) -> int:
    """Index of the fittest among the drawn indices; ties go to the lowest index."""
    drawn = sorted(set(int(i) for i in drawn))
    best = drawn[0]
    for i in drawn[1:]:
        if population[i].fitness > population[best].fitness:
            best = i
    return best


def tournament_select(population: Sequence[Individual], k: int, rng) -> Individual:
    if not population:
        raise ValueError("empty population")
    if k < 1:
        raise ValueError("tournament size must be at least 1")
    if any(ind.fitness is None for ind in population):
        raise ValueError("tournament over unevaluated individuals")
    return population[tournament_winner(population, rng.integers(0, len(population), size=k))]


def crossover_single_point(a: Individual, b: Individual, rng, cut: int | None = None):
    L = a.genome.size
    if b.genome.size != L:
        raise ValueError(f"genome length mismatch: {L} vs {b.genome.size}")
    if L < 2:
        return Individual(a.genome.copy()), Individual(b.genome.copy())
    if cut is None:
        cut = int(rng.integers(1, L))
    if not 1 <= cut <= L - 1:
        raise ValueError(f"cut must lie in 1..{L - 1}")
    c1 = np.concatenate([a.genome[:cut], b.genome[cut:]])
    c2 = np.concatenate([b.genome[:cut], a.genome[cut:]])
    return Individual(c1), Individual(c2)


def mutate(ind: Individual, p_mut: float, sigma, lo, hi, rng) -> Individual:
    """With probability ``p_mut`` perturb every gene by N(0, sigma^2) and clamp."""
    if rng.random() >= p_mut:
        return ind
    genome = ind.genome + rng.normal(size=ind.genome.shape) * sigma
    return Individual(np.clip(genome, lo, hi))


# ---------------------------------------------------------------- evolution

@dataclass
class EvolutionLog:
    genomes: np.ndarray                 # (generations, population, L)
    fitness: np.ndarray                 # (generations, population)
    seed: int = 0
    evaluations: int = 0                # fitness calls actually made
    meta: dict = field(default_factory=dict)

    @property
    def best_fitness(self) -> np.ndarray:
        return self.fitness.max(axis=1)

    @property
    def mean_fitness(self) -> np.ndarray:
        return self.fitness.mean(axis=1)

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.fitness[-1]))

    @property
    def best_genome(self) -> np.ndarray:
        return self.genomes[-1, self.best_index].copy()

    @property
    def final_best(self) -> float:
        return float(self.fitness[-1, self.best_index])

    def population_csv(self) -> str:
        G, P, L = self.genomes.shape
        lines = [",".join(["generation", "individual"] + [f"c_{j}" for j in range(L)] + ["fitness"])]
        for g in range(G):
            for i in range(P):
                vals = [fmt_float(x) for x in self.genomes[g, i]] + [fmt_float(self.fitness[g, i])]
                lines.append(f"{g},{i}," + ",".join(vals))
        return "\n".join(lines) + "\n"

    def summary_csv(self) -> str:
        lines = ["generation,best_fitness,mean_fitness"]
        for g, (b, m) in enumerate(zip(self.best_fitness, self.mean_fitness)):
            lines.append(f"{g},{fmt_float(b)},{fmt_float(m)}")
        return "\n".join(lines) + "\n"


def _evaluate(pop: list[Individual], g: int, fitness, batched: bool) -> int:
    todo = [i for i, ind in enumerate(pop) if ind.fitness is None]
    if not todo:
        return 0
    if batched:
        try:
            vals = np.asarray(fitness(np.stack([pop[i].genome for i in todo]), g,
                                      np.array(todo)), dtype=np.float64)
        except Exception as exc:    # no per-individual attribution inside a batch
            raise EvolutionError(g, todo[0], exc) from exc
        for i, v in zip(todo, vals):
            if not np.isfinite(v):
                raise EvolutionError(g, i, FloatingPointError("non-finite fitness"))
            pop[i].fitness = float(v)
        return len(todo)
    for i in todo:
        try:
            v = float(fitness(pop[i].genome, g, i))
            if not np.isfinite(v):
                raise FloatingPointError("non-finite fitness")
        except Exception as exc:
            raise EvolutionError(g, i, exc) from exc
        pop[i].fitness = v
    return len(todo)


def evolve(fitness: Callable, ga: GaConfig, seed: int, batched: bool = False) -> EvolutionLog:
    """Run the GA against an arbitrary fitness.

    ``fitness(genome, generation, index) -> float``, or with ``batched``
    ``fitness(genomes, generation, indices) -> array``. Elites keep their
    measured fitness instead of being re-scored.
    """
    rng = np.random.default_rng(derive_seed(seed, "ga"))
    lo, hi, sigma = ga.lo, ga.hi, ga.sigma
    pop = [Individual(rng.uniform(lo, hi)) for _ in range(ga.population)]
    G, P = ga.generations, ga.population
    genomes = np.zeros((G, P, ga.dim))
    fits = np.zeros((G, P))
    n_eval = 0
    for g in range(G):
        n_eval += _evaluate(pop, g, fitness, batched)
        genomes[g] = [ind.genome for ind in pop]
        fits[g] = [ind.fitness for ind in pop]
        log.debug("generation %d best=%.4f mean=%.4f", g, fits[g].max(), fits[g].mean())
        if g == G - 1:
            break
        order = np.argsort(-fits[g], kind="stable")
        nxt = [pop[i].copy() for i in order[:ga.elite_count]]
        while len(nxt) < P:
            a = tournament_select(pop, ga.tournament_size, rng)
            b = tournament_select(pop, ga.tournament_size, rng)
            if rng.random() < ga.crossover_prob:
                kids = crossover_single_point(a, b, rng)
            else:
                kids = Individual(a.genome.copy()), Individual(b.genome.copy())
            for kid in kids:
                if len(nxt) < P:
                    nxt.append(mutate(kid, ga.mutation_prob, sigma, lo, hi, rng))
        pop = nxt
    return EvolutionLog(genomes, fits, seed, n_eval)


def individual_seed(seed: int, generation: int, index: int) -> int:
    return derive_seed(seed, "individual", generation, index)


def evolve_policy(policy: Policy, ga: GaConfig, fit: FitnessSpec, seed: int,
                  **env_kw) -> EvolutionLog:
    if not policy.conditional:
        raise ValueError("condition search needs a conditional policy; this checkpoint was "
                         "trained without conditions (train-baseline output?)")
    if ga.dim != policy.condition_dim:
        raise ValueError(f"search bounds cover {ga.dim} dimensions but the policy takes "
                         f"{policy.condition_dim} (N-1)")

    def batch(genomes, g, indices):
        return evaluate_many(policy, genomes, [individual_seed(seed, g, i) for i in indices],
                             fit, **env_kw)

    out = evolve(batch, ga, seed, batched=True)
    out.meta["step_budget"] = ga_step_budget(ga, fit)
    return out
