"""First-reward time on the k-state chain: Thompson sampling vs the optimal known policy.

The Thompson agent is uncertain whether A or B is the rewarding action and
resamples its guess every step, so a run of k correct actions takes roughly
2^k steps. The agent that knows the chain earns its first reward at step k.

    python scripts/chain_hitting_time.py --kmin 3 --kmax 7 --seeds 200
"""

import argparse
import statistics

from genthompson.envs import default_chain_horizon
from genthompson.experiments import run_chain


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kmin", type=int, default=3)
    parser.add_argument("--kmax", type=int, default=7)
    parser.add_argument("--seeds", type=int, default=200)
    parser.add_argument("--resample-period", type=int, default=1)
    args = parser.parse_args()

    previous = None
    print(" k  optimal  thompson_median  ratio")
    for k in range(args.kmin, args.kmax + 1):
        horizon = default_chain_horizon(k)
        optimal = run_chain(k, horizon, 0, agent="optimal", stop_at_first_reward=True).summary["first_reward_time"]
        firsts = [
            run_chain(k, horizon, s, resample_period=args.resample_period, stop_at_first_reward=True).summary["first_reward_time"]
            for s in range(args.seeds)
        ]
        reached = [f for f in firsts if f is not None]
        median = statistics.median(reached) if reached else float("nan")
        ratio = f"{median / previous:.2f}" if previous else "-"
        print(f"{k:2d}  {optimal:7d}  {median:15.1f}  {ratio}  ({len(firsts) - len(reached)} seeds without reward)")
        previous = median


if __name__ == "__main__":
    main()
