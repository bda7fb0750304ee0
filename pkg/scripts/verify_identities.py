"""Check the identity catalogue on manufactured fields and print a summary per identity."""
import argparse
import time
from collections import defaultdict

from helibudget.oracle import CATALOGUE, TOLERANCE, verify_all


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--grids", type=int, nargs="+", default=[32, 64])
    ap.add_argument("--full", action="store_true", help="print every row")
    args = ap.parse_args()

    t0 = time.perf_counter()
    rep = verify_all(args.seeds, grid_sizes=tuple(args.grids))
    elapsed = time.perf_counter() - t0
    if args.full:
        print(rep.table())
        print()

    worst = defaultdict(float)
    for r in rep.rows:
        worst[r.identity] = max(worst[r.identity], r.residual / r.scale)
    print(f"{'identity':<32} {'worst residual/scale':>22}")
    for name in CATALOGUE:
        print(f"{name:<32} {worst[name]:22.3e}")
    bad = rep.failures()
    print(f"\n{len(rep.rows) - len(bad)}/{len(rep.rows)} passed at {TOLERANCE:g}*scale in {elapsed:.1f}s")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
