#!/usr/bin/env python3
"""Reinforced-urn posterior decay rates versus the reinforced divergence
gap, for a range of reinforcement values c at fixed sampling ratio beta."""

import argparse

import numpy as np

from elmap.divergences import polya_l_divergence
from elmap.polya import polya_decay_experiment
from elmap.prob import make_pmf


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--c", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()

    r = make_pmf([0, 1], [0.5, 0.5])
    cand_a = make_pmf([0, 1], [0.6, 0.4])
    cand_b = make_pmf([0, 1], [0.9, 0.1])

    print(f"{'c':>3} {'gap':>9} {'mean rate':>10} {'sd':>8} {'rel dev':>8}")
    for c in args.c:
        gap = polya_l_divergence(cand_b, r, args.beta, c) - polya_l_divergence(
            cand_a, r, args.beta, c
        )
        rep = polya_decay_experiment(
            [cand_a, cand_b], [1], r, args.beta, c, [args.n], range(args.seeds)
        )
        rates = np.array([sub.empirical_rate[-1] for sub in rep.reports])
        print(
            f"{c:3d} {gap:9.6f} {rates.mean():10.6f} {rates.std():8.4f} "
            f"{abs(rates.mean() - gap) / gap:8.4f}"
        )


if __name__ == "__main__":
    main()
