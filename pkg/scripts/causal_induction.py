"""Thompson sampling over the two causal hypotheses of the light-bulb device.

Prints the exact posterior of the true hypothesis every ``--every`` rounds
for each seed.

    python scripts/causal_induction.py --truth not_theta --seeds 10 --rounds 200
"""

import argparse

from genthompson.causal import causal_thompson_run, lightbulb_hypothesis_set
from genthompson.core import RandomSource


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--truth", choices=("theta", "not_theta"), default="theta")
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--rounds", type=int, default=200)
    parser.add_argument("--every", type=int, default=25)
    args = parser.parse_args()

    checkpoints = [t for t in range(args.every, args.rounds + 1, args.every)]
    print("seed  " + "  ".join(f"t={t:<5d}" for t in checkpoints))
    for seed in range(args.seeds):
        records = causal_thompson_run(lightbulb_hypothesis_set(), args.truth, args.rounds, RandomSource(seed))
        row = [float(records[t - 1].posterior[args.truth]) for t in checkpoints]
        print(f"{seed:4d}  " + "  ".join(f"{p:.5f}" for p in row))


if __name__ == "__main__":
    main()
