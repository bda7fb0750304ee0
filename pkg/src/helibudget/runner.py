"""Time integration driver and single-state budget summaries."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np

from .config import RunConfig
from .diagnostics import (
    TimeSeries,
    energy_budget_residual,
    growth_bound_check,
    helicity_tendency,
    integrated_law,
    make_report,
    pv_budget_residual,
    budget_residual,
)
from .systems import SolverFault, SystemState, cfl_dt, rhs, rk4_step

Q_GROWTH_RTOL = 1e-4
DIVB_RTOL = 1e-10


class RunAborted(RuntimeError):
    """A solver fault stopped the run; ``series`` holds everything reported so far."""

    def __init__(self, cause: SolverFault, series: TimeSeries, state: SystemState):
        super().__init__(str(cause))
        self.cause, self.series, self.state = cause, series, state


@dataclass
class RunResult:
    series: TimeSeries
    state: SystemState
    steps: int
    warnings: list = field(default_factory=list)


def rhs_for(config: RunConfig) -> Callable:
    if config.system == "ii-euler":
        return partial(rhs, tol=config.pressure_tol, max_iter=config.max_iter)
    return rhs


def invariant_warnings(state: SystemState, report, q0: float, config: RunConfig) -> list:
    """Human-readable messages for every invariant the report violates."""
    out = []
    tag = state.tag
    if tag in ("ii-euler", "comp-euler"):
        chk = growth_bound_check(report, q0, system=tag, rtol=config.bound_rtol)
        if not chk.passed:
            out.append(f"t={report.t:.6g}: |dH/dt|={chk.dHdt:.6e} exceeds growth bound {chk.bound:.6e}")
    if tag == "ii-euler" and report.q_maxnorm > q0 * (1 + Q_GROWTH_RTOL):
        out.append(f"t={report.t:.6g}: ||q||={report.q_maxnorm:.6e} grew beyond ||q0||={q0:.6e}")
    if tag == "mhd":
        g = state.grid
        divb = float(np.max(np.abs(g.div(state.B))))
        gradb = max(float(np.max(np.abs(g.grad(state.B[i])))) for i in range(3))
        if divb > DIVB_RTOL * gradb:
            out.append(f"t={report.t:.6g}: ||div B||={divb:.3e} exceeds {DIVB_RTOL:g}*||grad B||")
    return out


def run(
    config: RunConfig,
    workers: int = 1,
    on_report: Optional[Callable] = None,
    state: Optional[SystemState] = None,
) -> RunResult:
    """Integrate from t=0 to ``t_end`` with RK4, reporting every ``stride`` steps.

    The time step is ``config.dt`` if given, else the CFL step; the last step
    is shortened to land on ``t_end``. t=0 and the final state are always
    reported. On a solver fault :class:`RunAborted` carries the partial series.
    """
    if state is None:
        state = config.initial_state(workers)
    f = rhs_for(config)
    meta = {"T": config.T} if config.T is not None else {}
    series = TimeSeries(system=config.system, n=config.n, L=config.L, meta=meta)
    warnings: list = []
    t_end = config.t_end

    def emit(s, tend=None):
        rep = make_report(s, tend if tend is not None else f(s), q0_maxnorm=q0)
        series.reports.append(rep)
        warnings.extend(invariant_warnings(s, rep, q0, config))
        if on_report is not None:
            on_report(rep, s)

    q0 = None
    tend0 = f(state)
    q0 = make_report(state, tend0).q_maxnorm
    emit(state, tend0)
    steps = 0
    while state.t < t_end:
        dt = config.dt if config.dt is not None else cfl_dt(state, config.cfl, config.dt_max)
        remaining = t_end - state.t
        last = dt >= remaining * (1 - 1e-12)
        if last:
            dt = remaining
        try:
            state = rk4_step(state, dt, f)
        except SolverFault as err:
            raise RunAborted(err, series, state) from err
        if last:
            state = state.replace(t=t_end)
        steps += 1
        if last or steps % config.stride == 0:
            try:
                emit(state)
            except SolverFault as err:
                raise RunAborted(err, series, state) from err
    return RunResult(series=series, state=state, steps=steps, warnings=warnings)


def budget_summary(state: SystemState, **rhs_kw) -> dict:
    """Residual norms of every local budget for a single state."""
    tend = rhs(state, **rhs_kw)
    g = state.grid
    dh = helicity_tendency(state, tend)
    r = budget_residual(state, tend)
    rq = pv_budget_residual(state, tend)
    re = energy_budget_residual(state, tend)
    src, direct = integrated_law(state, tend)
    out = {
        "system": state.tag,
        "n": g.n,
        "helicity_residual_max": float(np.max(np.abs(r))),
        "helicity_residual_l2": float(np.sqrt(g.integrate(r * r))),
        "helicity_tendency_max": float(np.max(np.abs(dh))),
        "pv_residual_max": float(np.max(np.abs(rq))),
        "energy_residual_max": float(np.max(np.abs(re))),
        "dHdt_source": src,
        "dHdt_direct": direct,
    }
    if tend.pressure_iterations is not None:
        out["pressure_iterations"] = tend.pressure_iterations
    return out
