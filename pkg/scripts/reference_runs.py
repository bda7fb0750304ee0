"""Run every configuration in configs/ and summarise the conserved quantities.

For each run: step count, relative drift of H, E0 and (where defined) E and
E0B, the worst growth-bound margin, and the helicity length-scale report.
CSV and snapshot files go to --output-dir.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from helibudget import io, runner
from helibudget.config import load_config
from helibudget.diagnostics import growth_bound_check, lambda_H

ROOT = Path(__file__).resolve().parents[1]


def drift(col):
    v = np.array([np.nan if x is None else x for x in col], dtype=float)
    if np.isnan(v).all() or v[0] == 0:
        return float("nan")
    return float(np.max(np.abs(v - v[0])) / abs(v[0]))


def summarise(path, out_dir, threads):
    cfg = load_config(path)
    t0 = time.perf_counter()
    res = runner.run(cfg, workers=threads)
    elapsed = time.perf_counter() - t0
    ts = res.series
    io.write_timeseries(ts, out_dir / f"{path.stem}.csv")
    io.write_snapshot(res.state, out_dir / f"{path.stem}.snap")

    print(f"{path.name}: {cfg.system} n={cfg.n} t_end={cfg.t_end} steps={res.steps} ({elapsed:.1f}s)")
    cols = {"H": ts.column("H"), "E0": ts.column("E0"), "E": ts.column("E"), "E0B": ts.column("E0B")}
    print("  drift " + "  ".join(f"{k}={drift(v):.2e}" for k, v in cols.items()))
    print(f"  max budget residual {max(r.residual_maxnorm for r in ts.reports):.2e}")
    q0 = ts.reports[0].q_maxnorm
    if cfg.system in ("ii-euler", "comp-euler"):
        m = min(growth_bound_check(r, q0, system=cfg.system).margin for r in ts.reports)
        print(f"  min growth-bound margin {m:.3e}")
    lam = lambda_H(ts)
    tail = f"bound {lam.lambdaH_inv_bound:.4e} ({'pass' if lam.passed else 'FAIL'})" if lam.bound_checked else "bound not asserted"
    print(f"  lambda_H^-1 {lam.lambdaH_inv:.4e}, {tail}")
    for w in res.warnings:
        print(f"  warning: {w}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", type=Path, default=sorted((ROOT / "configs").glob("*.ini")))
    ap.add_argument("--output-dir", type=Path, default=Path("runs"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    args.output_dir.mkdir(parents=True, exist_ok=True)
    for p in args.configs:
        summarise(p, args.output_dir, args.threads)


if __name__ == "__main__":
    main()
