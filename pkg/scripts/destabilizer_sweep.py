"""Randomized sweep of the passive destabilizer construction.

Draws stable non-passive systems, builds R, and tabulates the peak gain, the
crossing frequency, the achieved determinant and the closed-loop pole distance
to j*omega0.  Passive draws are counted separately since they must be refused.

Usage::

    python3 scripts/destabilizer_sweep.py --count 50 --seed 0
"""

import argparse

import numpy as np

from antipassive import ensembles, lti
from antipassive.destabilizer import construct_passive_destabilizer
from antipassive.errors import AlreadyPassive


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-order", type=int, default=6)
    parser.add_argument("--omega0-rule", choices=("witness", "peak"), default="witness")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>2} {'m':>2} {'method':>10} {'sigma1':>10} {'omega0':>10} {'|det|':>9} {'dist':>9} {'R':>11} loop")
    failures = 0
    for _ in range(args.count):
        n, m = int(rng.integers(1, args.max_order + 1)), int(rng.integers(1, 4))
        G = ensembles.random_stable_nonpassive(rng, n, m)
        R, w0, rep = construct_passive_destabilizer(G, omega0_rule=args.omega0_rule)
        unstable = not lti.is_hurwitz(lti.feedback_interconnect(G, R, sign=-1))
        dist = rep.closed_loop.distance_to_jw0 if rep.closed_loop is not None else float("nan")
        failures += not (unstable and rep.r_certificate.passive)
        print(
            f"{n:2d} {m:2d} {rep.method:>10} {rep.sigma1:10.4f} {w0:10.4f} {abs(rep.det_I_plus_S_delta):9.1e} "
            f"{dist:9.1e} {rep.r_certificate.verdict:>11} {'unstable' if unstable else 'STABLE'}"
        )

    refused = 0
    for _ in range(args.count):
        try:
            construct_passive_destabilizer(ensembles.random_passive(rng, int(rng.integers(1, args.max_order + 1)), int(rng.integers(1, 4))))
        except AlreadyPassive:
            refused += 1
    print(f"\nnon-passive draws destabilized: {args.count - failures}/{args.count}")
    print(f"passive draws refused: {refused}/{args.count}")


if __name__ == "__main__":
    main()
