"""Two Thompson samplers playing matching pennies.

Prints the final posterior means and average payoffs per seed, and
optionally writes the trajectory of one seed as CSV.

    python scripts/matching_pennies.py --seeds 20 --rounds 10000 --trace out/pennies_seed0.csv
"""

import argparse
import statistics
from pathlib import Path

from genthompson.cli import write_csv
from genthompson.experiments import run_pennies


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--rounds", type=int, default=10_000)
    parser.add_argument("--trace", type=Path, help="CSV path for seed 0's trajectory")
    args = parser.parse_args()

    summaries = []
    for seed in range(args.seeds):
        res = run_pennies(args.rounds, seed)
        s = res.summary
        summaries.append(s)
        print(f"seed {seed:3d}  theta_mean {s['theta_mean']:.4f}  xi_mean {s['xi_mean']:.4f}  mean_u {s['mean_u']:+.4f}")
        if seed == 0 and args.trace:
            args.trace.parent.mkdir(parents=True, exist_ok=True)
            write_csv(args.trace, res)
    print(f"average payoff over seeds: u {statistics.fmean(s['mean_u'] for s in summaries):+.4f}, "
          f"v {statistics.fmean(s['mean_v'] for s in summaries):+.4f}")


if __name__ == "__main__":
    main()
