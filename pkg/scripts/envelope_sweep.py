"""Estimation error envelope per seed, with and without the float64 roundoff floor."""
import argparse
import logging

import numpy as np

from uiobank import build, catalog, simulate
from uiobank.catalog import envelope_violations, roundoff_floor
from uiobank.sim import decay_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--example", type=int, choices=(1, 2), default=1)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)
    print("seed  |e0|      fitted   lam_bar  c        first raw violation  floored violations")
    for seed in range(args.seeds):
        s = catalog.scenario(args.example, seed=seed)
        setup = build(s)
        t = simulate(s, setup)
        err = np.linalg.norm(t.error, axis=1)
        rho = setup.bank_spec.max_spectral_radius()
        c, lam, raw = envelope_violations(err, rho)
        _, _, floored = envelope_violations(err, rho, floor=roundoff_floor(t))
        first = raw[0] if raw else "-"
        print(f"{seed:4d}  {err[0]:.2e}  {decay_rate(err):.3f}    {lam:.3f}    {c:.2e} "
              f"{first!s:>20}  {len(floored)}")


if __name__ == "__main__":
    main()
