"""Compare the integral (parallel-sum quadrature) route with the spectral route.

Draws random discrete measures and random PD pairs and reports the worst
relative deviation per matrix size.
"""

import argparse

import numpy as np

from kam.functions import from_measure
from kam.hermitian import operator_norm
from kam.means import MeanDescriptor, mean_quadrature, mean_spectral
from kam.sampling import random_measure, random_pd


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--measures", type=int, default=50)
    ap.add_argument("--pairs", type=int, default=50)
    ap.add_argument("--max-atoms", type=int, default=5)
    ap.add_argument("--max-dim", type=int, default=5)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    worst = {n: 0.0 for n in range(1, args.max_dim + 1)}
    for _ in range(args.measures):
        sigma = MeanDescriptor(from_measure(random_measure(rng, args.max_atoms)))
        for _ in range(args.pairs):
            n = int(rng.integers(1, args.max_dim + 1))
            a, b = random_pd(rng, n), random_pd(rng, n)
            s = mean_spectral(sigma, a, b)
            dev = operator_norm(s - mean_quadrature(sigma, a, b)) / operator_norm(s)
            worst[n] = max(worst[n], dev)
    for n, dev in worst.items():
        print(f"n={n}: max relative deviation {dev:.3e}")
    return 0 if max(worst.values()) <= 1e-8 else 1


if __name__ == "__main__":
    raise SystemExit(main())
