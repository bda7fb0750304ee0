"""Budget residual norms of the canonical states on a sequence of grids.

Prints one row per (system, n) with the max-norm of the helicity, potential
vorticity and energy residuals, and the reduction factor from the previous grid.
"""
import argparse
import time

import numpy as np

from helibudget.diagnostics import budget_residual, energy_budget_residual, helicity_tendency, pv_budget_residual
from helibudget.initial import canonical_state
from helibudget.spectral import make_grid
from helibudget.systems import SYSTEMS, rhs

LAWS = ("helicity", "pv", "energy")


def residuals(tag, n, workers=1):
    s = canonical_state(tag, make_grid(n, workers=workers))
    tend = rhs(s)
    return {
        "helicity": np.abs(budget_residual(s, tend)).max(),
        "pv": np.abs(pv_budget_residual(s, tend)).max(),
        "energy": np.abs(energy_budget_residual(s, tend)).max(),
        "dh_dt": np.abs(helicity_tendency(s, tend)).max(),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--systems", nargs="+", default=list(SYSTEMS), choices=SYSTEMS)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    print(f"{'system':<11} {'n':>4} " + " ".join(f"{law:>10} {'red.':>8}" for law in LAWS) + f" {'|dh/dt|':>10} {'sec':>6}")
    for tag in args.systems:
        prev = None
        for n in args.grids:
            t0 = time.perf_counter()
            r = residuals(tag, n, args.threads)
            cells = []
            for law in LAWS:
                red = prev[law] / r[law] if prev is not None and r[law] > 0 else float("nan")
                cells.append(f"{r[law]:10.3e} {red:8.1e}")
            print(f"{tag:<11} {n:>4} " + " ".join(cells) + f" {r['dh_dt']:10.3e} {time.perf_counter() - t0:6.2f}")
            prev = r


if __name__ == "__main__":
    main()
