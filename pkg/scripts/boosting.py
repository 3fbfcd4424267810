"""Conditional training plus condition search against a compensated baseline.

For each master seed: train the conditional agent, run the GA over its
condition space, train the fixed-reward baseline for the extra search budget,
and score both on the same evaluation seeds.

    python3 scripts/boosting.py --config point-runner-ppo --seeds 0 1 2 \
        --override fitness.episodes=10 --out runs/boosting
"""
import argparse
import logging
import time
from pathlib import Path

from cdrl import config
from cdrl.checkpoint import atomic_write
from cdrl.compare import ComparisonReport, compare_seed


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="point-runner-ppo")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--override", action="append", default=[])
    p.add_argument("--out", default="runs/boosting")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    report = ComparisonReport()
    for seed in args.seeds:
        cfg = config.load(args.config, [*args.override, f"seed={seed}"])
        t0 = time.time()
        result, evo = compare_seed(cfg)
        report.results.append(result)
        atomic_write(out / f"seed{seed}_evolution_summary.csv", evo.summary_csv())
        print(f"seed {seed}: search best {result.ga_best_fitness:.3f}, re-scored "
              f"{result.cdrl_fitness:.3f}, baseline {result.baseline_fitness:.3f} "
              f"({time.time() - t0:.0f}s)", flush=True)
        atomic_write(out / "comparison.csv", report.csv())
    print(f"condition search matched or beat the baseline on {report.wins}/{len(args.seeds)} seeds")


if __name__ == "__main__":
    main()
