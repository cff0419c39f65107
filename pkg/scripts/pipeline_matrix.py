"""Run the preserver pipeline over Jordan and corrupted maps for every catalog mean.

Prints one row per (map, n, mean) with the verdict, the deciding stage and
the wall time. Exits non-zero if a Jordan map is not certified or a corrupted
map is.
"""

import argparse
import time

import numpy as np

from kam.maps import Congruence, JordanTranspose, JordanUnitary, Perturbed, identity_map
from kam.means import catalog_means
from kam.preserver import PipelineConfig, run_pipeline
from kam.sampling import random_unitary


def cases(rng, dims):
    for n in dims:
        u = random_unitary(rng, n)
        yield "unitary", n, JordanUnitary(u), True
        yield "transpose", n, JordanTranspose(u), True
        yield "perturbed", n, Perturbed(JordanUnitary(u), 1e-2, seed=n), False
        c = np.diag(np.linspace(1.0, 2.0, n))
        yield "congruence", n, Congruence(c, identity_map(n)), False


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = PipelineConfig(trials=args.trials, seed=args.seed)
    wrong = 0
    print(f"{'map':<11}{'n':>3}  {'mean':<13}{'verdict':<18}{'stage':<30}{'time':>7}")
    for label, n, phi, should_pass in cases(rng, args.dims):
        for m in catalog_means():
            t0 = time.perf_counter()
            rep = run_pipeline(phi, m, cfg)
            dt = time.perf_counter() - t0
            wrong += rep.certified != should_pass
            print(f"{label:<11}{n:>3}  {m.label:<13}{rep.overall:<18}{rep.stage or '-':<30}{dt:>6.2f}s")
    print(f"\n{wrong} unexpected verdicts")
    return 1 if wrong else 0


if __name__ == "__main__":
    raise SystemExit(main())
