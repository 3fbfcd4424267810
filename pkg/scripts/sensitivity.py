"""How the condition refresh period (tau) and the range half-width (epsilon)
affect what the condition search can recover.

Each (tau, epsilon) pair trains one conditional agent, runs the GA, and
re-scores the best condition on the shared evaluation seed. Output is one CSV
row per pair.

    python3 scripts/sensitivity.py --taus 1 4 16 --epsilons 0.1 0.2 0.5 \
        --override algo.total_steps=100000 --out runs/sensitivity
"""
import argparse
import itertools
import logging
from pathlib import Path

from cdrl import config
from cdrl.algorithms import policy_from_checkpoint
from cdrl.checkpoint import atomic_write, fmt_float
from cdrl.compare import eval_seed, train_conditional
from cdrl.hindsight import evaluate_fitness, evolve_policy


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="point-runner-ppo")
    p.add_argument("--taus", type=int, nargs="+", default=[1, 4, 16])
    p.add_argument("--epsilons", type=float, nargs="+", default=[0.1, 0.2, 0.5])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--override", action="append", default=[])
    p.add_argument("--out", default="runs/sensitivity")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    rows = ["tau,epsilon,final_train_fitness,search_best,rescored_best"]
    for tau, eps in itertools.product(args.taus, args.epsilons):
        cfg = config.load(args.config, [*args.override, f"seed={args.seed}",
                                        f"algo.refresh_period={tau}",
                                        f"reward_space.epsilon={eps}"])
        res = train_conditional(cfg)
        pol = policy_from_checkpoint(res.checkpoint)
        evo = evolve_policy(pol, cfg.ga, cfg.fitness, cfg.seed, **cfg.env_kw)
        rescored = evaluate_fitness(pol, evo.best_genome, cfg.fitness, eval_seed(cfg.seed),
                                    **cfg.env_kw)
        train_fit = res.log[-1]["mean_eval_fitness"] if res.log else float("nan")
        rows.append(",".join([str(tau), fmt_float(eps), fmt_float(train_fit),
                              fmt_float(evo.final_best), fmt_float(rescored)]))
        print(f"tau={tau} eps={eps}: search best {evo.final_best:.3f}, "
              f"re-scored {rescored:.3f}", flush=True)
        atomic_write(Path(args.out) / "sensitivity.csv", "\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
