"""Command line entry point.

Exit codes: 0 ok, 1 invariant or bound failure, 2 usage/config error,
3 runtime fault (density floor, pressure solve divergence).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .config import ConfigError, load_config
from .diagnostics import lambda_H
from .oracle import verify_all
from .runner import RunAborted, budget_summary, run
from .systems import SolverFault

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE, EXIT_FAULT = 0, 1, 2, 3

log = logging.getLogger("helibudget")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", type=Path, default=Path("."), help="where output files go")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    common.add_argument("--strict", action="store_true", help="exit 1 on any invariant warning")
    p = _Parser(prog="helibudget", description="Helicity budget solver and diagnostics")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", parents=[common], help="integrate a configuration and write CSV + snapshot")
    r.add_argument("config", type=Path)
    v = sub.add_parser("verify", parents=[common], help="check the pointwise identity catalogue")
    v.add_argument("--seeds", type=int, default=10)
    v.add_argument("--grids", type=int, nargs="+", default=[32, 64])
    b = sub.add_parser("budget", parents=[common], help="budget residuals of the initial state")
    b.add_argument("config", type=Path)
    rp = sub.add_parser("report", parents=[common], help="helicity length scale from a run CSV")
    rp.add_argument("csv", type=Path)
    rp.add_argument("--T", type=float, default=None, help="averaging window (default: header value or whole run)")
    return p


def _kv(d: dict) -> str:
    return "\n".join(f"{k} = {io.fmt(v) if isinstance(v, float) else v}" for k, v in d.items()) + "\n"


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = args.output_dir
    stem = args.config.stem
    csv_path, snap_path = out / f"{stem}.csv", out / f"{stem}.snap"
    try:
        res = run(cfg, workers=args.threads)
    except RunAborted as err:
        io.write_timeseries(err.series, csv_path)
        print(f"runtime fault at t={err.state.t:.6g}: {err.cause}", file=sys.stderr)
        print(f"partial series ({len(err.series.reports)} rows) written to {csv_path}", file=sys.stderr)
        return EXIT_FAULT
    io.write_timeseries(res.series, csv_path)
    io.write_snapshot(res.state, snap_path)
    last = res.series.reports[-1]
    print(f"{cfg.system} n={cfg.n}: {res.steps} steps to t={res.state.t:.6g}, {len(res.series.reports)} reports")
    print(f"H={last.H:.10e} E0={last.E0:.10e} residual_max={last.residual_maxnorm:.3e}")
    print(f"wrote {csv_path} and {snap_path}")
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_INVARIANT if (args.strict and res.warnings) else EXIT_OK


def cmd_verify(args) -> int:
    if args.seeds < 1:
        raise ConfigError("--seeds must be >= 1", "seeds")
    try:
        rep = verify_all(args.seeds, grid_sizes=tuple(args.grids))
    except ValueError as err:
        raise ConfigError(str(err), "grids") from None
    table = rep.table()
    print(table)
    args.output_dir.mkdir(parents=True, exist_ok=True)
    (args.output_dir / "verify.txt").write_text(table + "\n")
    bad = rep.failures()
    print(f"{len(rep.rows) - len(bad)}/{len(rep.rows)} identity checks passed")
    return EXIT_INVARIANT if bad else EXIT_OK


def cmd_budget(args) -> int:
    cfg = load_config(args.config)
    state = cfg.initial_state(args.threads)
    kw = dict(tol=cfg.pressure_tol, max_iter=cfg.max_iter) if cfg.system == "ii-euler" else {}
    summary = budget_summary(state, **kw)
    text = _kv(summary)
    print(text, end="")
    args.output_dir.mkdir(parents=True, exist_ok=True)
    (args.output_dir / f"{args.config.stem}_budget.txt").write_text(text)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        series = io.read_timeseries(args.csv)
    except (io.FormatError, OSError, TypeError) as err:
        raise ConfigError(f"malformed CSV: {err}") from None
    if not series.reports:
        raise ConfigError("malformed CSV: no data rows")
    T = args.T if args.T is not None else (float(series.meta["T"]) if "T" in series.meta else None)
    rep = lambda_H(series, T=T)
    ratio = rep.lambdaH_inv / rep.lambdaH_inv_bound if rep.lambdaH_inv_bound not in (0.0, float("inf")) else float("nan")
    verdict = "pass" if rep.passed else "FAIL"
    if not rep.bound_checked:
        verdict = "n/a"
    path = io.write_lambda_report(rep, args.output_dir / f"{args.csv.stem}_lambda.txt",
                                  extra={"system": series.system, "ratio": io.fmt(ratio), "verdict": verdict})
    print(f"{series.system}: <|dH/dt|> over T={rep.T:.6g} is {rep.mean_abs_dHdt:.6e}")
    print(f"lambda_H^-1 = {rep.lambdaH_inv:.10e}, bound = {rep.lambdaH_inv_bound:.10e}, ratio = {ratio:.6g}")
    print(f"verdict: {verdict} (written to {path})")
    return EXIT_OK if rep.passed else EXIT_INVARIANT


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "budget": cmd_budget, "report": cmd_report}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverFault, FloatingPointError) as err:
        print(f"runtime fault: {err}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
