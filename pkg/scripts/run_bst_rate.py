#!/usr/bin/env python3
"""Posterior decay-rate experiment on the two-candidate binary grid.

Simulates i.i.d. paths from r = (0.5, 0.5), tracks -(1/n) log posterior
mass of the worse candidate across geometric checkpoints, and compares
with the divergence gap. Writes a CSV when --out is given.
"""

import argparse
import csv

import numpy as np

from elmap.bayes import decay_curve, make_prior_grid
from elmap.divergences import l_divergence
from elmap.prob import make_pmf


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--n-max", type=int, default=10000)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    r = make_pmf([0, 1], [0.5, 0.5])
    cand_a = make_pmf([0, 1], [0.6, 0.4])
    cand_b = make_pmf([0, 1], [0.9, 0.1])
    prior = make_prior_grid([cand_a, cand_b])
    gap = l_divergence(cand_b, r) - l_divergence(cand_a, r)

    schedule = [10]
    while schedule[-1] * 2 <= args.n_max:
        schedule.append(schedule[-1] * 2)
    if schedule[-1] != args.n_max:
        schedule.append(args.n_max)

    reports = [
        decay_curve(prior, [1], r, schedule, seed) for seed in range(args.seeds)
    ]
    rates = np.array([rep.empirical_rate for rep in reports])

    print(f"theoretical rate: {gap:.6f}")
    print(f"{'n':>8} {'mean rate':>10} {'sd':>8} {'rel dev':>8}")
    for j, n in enumerate(schedule):
        mean = rates[:, j].mean()
        print(
            f"{n:8d} {mean:10.6f} {rates[:, j].std():8.4f} "
            f"{abs(mean - gap) / gap:8.4f}"
        )

    if args.out:
        with open(args.out, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["seed", "n", "target", "empirical_value", "theoretical_value"])
            for rep in reports:
                for n, rate in zip(rep.checkpoints, rep.empirical_rate):
                    wr.writerow([rep.seed, n, "Q", f"{rate:.17g}", f"{gap:.17g}"])
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
