"""Helicity densities, fluxes, sources, potential vorticities and budgets.

Per system (``d_t h + div J = sigma``):

============  ============  ==========================================  ==================================
system        density h     flux J                                      source sigma
============  ============  ==========================================  ==================================
baro-euler    u.w           h u + w (Pi - |u|^2/2)                      0
ii-euler      (rho u).curl(rho u)  h u + P curl(rho u) - w rho^2 |u|^2/2   -q rho |u|^2
comp-euler    same          same                                        -q rho |u|^2 - 2 h div u
mhd           rho u.B       h u + B (P - rho |u|^2/2)                   -q_c |u|^2/2 - h div u
============  ============  ==========================================  ==================================

with ``w = curl u``, ``q = w.grad rho`` and ``q_c = B.grad rho``. Time
derivatives of diagnostic densities are always composed from a
:class:`~helibudget.systems.Tendency` by the product rule, never by
differencing snapshots.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .systems import SystemState, Tendency, rhs


def _sq(v):
    return np.sum(v * v, axis=0)


def momentum(state: SystemState) -> np.ndarray:
    return state.grid.mul(state.rho, state.u)


def helicity_density(state: SystemState) -> np.ndarray:
    """``u.w`` (baro-euler), ``h_rho`` (ii/comp-euler) or ``h_c`` (mhd)."""
    g = state.grid
    if state.tag == "baro-euler":
        return g.dot(state.u, g.curl(state.u))
    if state.tag == "mhd":
        return g.dealias(state.rho * np.sum(state.u * state.B, axis=0))
    m = momentum(state)
    return g.dot(m, g.curl(m))


def classic_helicity_density(state: SystemState) -> np.ndarray:
    g = state.grid
    return g.dot(state.u, g.curl(state.u))


def potential_vorticity(state: SystemState) -> np.ndarray:
    """``q = w.grad rho``, or ``q_c = B.grad rho`` for mhd."""
    g = state.grid
    carrier = state.B if state.tag == "mhd" else g.curl(state.u)
    return g.dot(carrier, g.grad(state.rho))


def energy_density(state: SystemState) -> np.ndarray:
    """Total energy density conserved by the system.

    ii-euler: kinetic only; baro-euler: kinetic plus ``P / (gamma - 1)``;
    comp-euler: ``rho (|u|^2/2 + e)``; mhd adds ``|B|^2 / 2``.
    """
    kin = 0.5 * state.rho * _sq(state.u)
    if state.tag == "ii-euler":
        return kin
    if state.tag == "baro-euler":
        return kin + state.eos.internal_energy_density(state.rho)
    out = kin + state.rho * state.e
    if state.tag == "mhd":
        out = out + 0.5 * _sq(state.B)
    return out


def energies(state: SystemState) -> dict:
    """``E0`` (kinetic), ``E`` (fluid total) and ``E0B`` (with magnetic), None where not applicable."""
    g = state.grid
    kin = 0.5 * state.rho * _sq(state.u)
    out = {"E0": g.integrate(kin), "E": None, "E0B": None}
    if state.tag == "baro-euler":
        out["E"] = g.integrate(energy_density(state))
    elif state.tag in ("comp-euler", "mhd"):
        out["E"] = g.integrate(kin + state.rho * state.e)
    if state.tag == "mhd":
        out["E0B"] = g.integrate(energy_density(state))
    return out


def _pressure(state: SystemState, tend: Tendency) -> np.ndarray:
    if tend.pressure is not None:
        return tend.pressure
    if state.tag == "ii-euler":
        raise ValueError("ii-euler flux needs the pressure carried by the tendency")
    return state.eos.pressure(state.rho, state.e)


def baro_flux(state: SystemState, pi: np.ndarray) -> np.ndarray:
    """``J_pi = h u + w (Pi - |u|^2/2)`` for an arbitrary pressure head ``pi``."""
    g, u = state.grid, state.u
    w = g.curl(u)
    h = g.dot(u, w)
    return g.mul(h, u) + g.mul(w, pi - 0.5 * _sq(u))


def flux_and_source(state: SystemState, tend: Tendency):
    """Flux vector ``J`` and source ``sigma`` of the helicity-type budget."""
    g, rho, u = state.grid, state.rho, state.u
    if state.tag == "baro-euler":
        J = baro_flux(state, state.eos.enthalpy(rho))
        return J, np.zeros(g.shape)
    P = _pressure(state, tend)
    u2 = _sq(u)
    if state.tag == "mhd":
        B = state.B
        h = helicity_density(state)
        J = g.mul(h, u) + g.mul(B, P - 0.5 * rho * u2)
        qc = potential_vorticity(state)
        sigma = -0.5 * g.mul(qc, u2) - g.mul(h, g.div(u))
        return J, sigma
    m = momentum(state)
    cm = g.curl(m)
    w = g.curl(u)
    h = g.dot(m, cm)
    J = g.mul(h, u) + g.mul(P, cm) - g.mul(w, 0.5 * rho**2 * u2)
    q = potential_vorticity(state)
    sigma = -g.mul(q, rho * u2)
    if state.tag == "comp-euler":
        sigma = sigma - 2.0 * g.mul(h, g.div(u))
    return J, sigma


def helicity_tendency(state: SystemState, tend: Tendency) -> np.ndarray:
    """Exact ``d_t h`` composed from the prognostic tendencies."""
    g, rho, u = state.grid, state.rho, state.u
    if state.tag == "baro-euler":
        return g.dealias(np.sum(tend.u * g.curl(u) + u * g.curl(tend.u), axis=0))
    dm = g.dealias(rho * tend.u + u * tend.rho)
    m = momentum(state)
    if state.tag == "mhd":
        return g.dealias(np.sum(dm * state.B + m * tend.B, axis=0))
    return g.dealias(np.sum(g.curl(m) * dm + m * g.curl(dm), axis=0))


def budget_residual(state: SystemState, tend: Tendency) -> np.ndarray:
    """``d_t h + div J - sigma``; vanishes up to spatial resolution error."""
    J, sigma = flux_and_source(state, tend)
    return helicity_tendency(state, tend) + state.grid.div(J) - sigma


def source_integral(state: SystemState) -> float:
    """Right-hand side of the integrated helicity law.

    Uses only density, velocity (and B); no pressure is evaluated here.
    """
    g, rho, u = state.grid, state.rho, state.u
    if state.tag == "baro-euler":
        return 0.0
    u2 = _sq(u)
    if state.tag == "mhd":
        qc = potential_vorticity(state)
        h = helicity_density(state)
        return -0.5 * g.integrate(qc * u2) - g.integrate(h * g.div(u))
    q = potential_vorticity(state)
    val = -g.integrate(q * rho * u2)  # -2 int q E0
    if state.tag == "comp-euler":
        val -= 2.0 * g.integrate(helicity_density(state) * g.div(u))
    return val


def integrated_law(state: SystemState, tend: Tendency) -> tuple[float, float]:
    """``(dHdt_source, dHdt_direct)``; the second integrates the exact ``d_t h``."""
    return source_integral(state), state.grid.integrate(helicity_tendency(state, tend))


def pv_budget_residual(state: SystemState, tend: Tendency) -> np.ndarray:
    """Residual of the potential-vorticity law.

    ii-euler: ``Dq/Dt``; baro/comp-euler: ``d_t q + div(q u) + div(w rho div u)``;
    mhd: ``d_t q_c + div(u q_c) + div(rho div(u) B)``.
    """
    g, rho, u = state.grid, state.rho, state.u
    grho = g.grad(rho)
    gdrho = g.grad(tend.rho)
    if state.tag == "mhd":
        B = state.B
        qc = g.dot(B, grho)
        dq = g.dealias(np.sum(tend.B * grho + B * gdrho, axis=0))
        return dq + g.div(g.mul(u, qc)) + g.div(g.mul(B, rho * g.div(u)))
    w = g.curl(u)
    q = g.dot(w, grho)
    dq = g.dealias(np.sum(g.curl(tend.u) * grho + w * gdrho, axis=0))
    if state.tag == "ii-euler":
        return dq + g.dot(u, g.grad(q))
    return dq + g.div(g.mul(q, u)) + g.div(g.mul(w, rho * g.div(u)))


def energy_budget_residual(state: SystemState, tend: Tendency) -> np.ndarray:
    """Residual of ``d_t E + div{(E + P) u} = 0`` (plus the Poynting terms for mhd)."""
    g, rho, u = state.grid, state.rho, state.u
    P = _pressure(state, tend)
    u2 = _sq(u)
    dE = 0.5 * u2 * tend.rho + rho * np.sum(u * tend.u, axis=0)
    if state.tag == "baro-euler":
        dE = dE + state.eos.enthalpy(rho) * tend.rho
    elif state.tag in ("comp-euler", "mhd"):
        dE = dE + state.e * tend.rho + rho * tend.e
    if state.tag == "mhd":
        dE = dE + np.sum(state.B * tend.B, axis=0)
    ed = energy_density(state)
    flux = g.mul(ed + P, u)
    if state.tag == "mhd":
        B = state.B
        flux = flux + g.mul(0.5 * _sq(B), u) - g.mul(np.sum(u * B, axis=0), B)
    return g.dealias(dE) + g.div(flux)


def energy_flux_divergence_scale(state: SystemState, tend: Tendency) -> float:
    """``||div((E0 + P) u)||_inf``, the reference magnitude for energy residuals."""
    g = state.grid
    P = _pressure(state, tend)
    return float(np.max(np.abs(g.div(g.mul(energy_density(state) + P, state.u)))))


# reports ------------------------------------------------------------------

CSV_COLUMNS = (
    "t",
    "H",
    "E0",
    "E",
    "E0B",
    "dHdt_source",
    "dHdt_direct",
    "q_maxnorm",
    "residual_maxnorm",
    "residual_l2",
    "bound_rhs",
    "divu_l1",
    "mass",
)


@dataclass
class BudgetReport:
    t: float
    H: float
    E0: float
    E: Optional[float]
    E0B: Optional[float]
    dHdt_source: float
    dHdt_direct: float
    q_maxnorm: float
    residual_maxnorm: float
    residual_l2: float
    bound_rhs: Optional[float]
    divu_l1: float
    mass: float
    H_classic: float = 0.0
    h_maxnorm: float = 0.0
    dHdt_series: Optional[float] = None

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in CSV_COLUMNS}


def growth_bound_rhs(tag: str, q_maxnorm: float, E0: float, h_maxnorm: float, divu_l1: float):
    """Right-hand side of the applicable growth bound (None for mhd)."""
    if tag == "baro-euler":
        return 0.0
    if tag == "ii-euler":
        return 2.0 * q_maxnorm * E0
    if tag == "comp-euler":
        return 2.0 * q_maxnorm * E0 + 2.0 * h_maxnorm * divu_l1
    return None


def make_report(state: SystemState, tend: Optional[Tendency] = None, q0_maxnorm: Optional[float] = None) -> BudgetReport:
    """Assemble every diagnostic for one state. ``q0_maxnorm`` feeds the ii-euler bound."""
    g = state.grid
    if tend is None:
        tend = rhs(state)
    h = helicity_density(state)
    q = potential_vorticity(state)
    r = budget_residual(state, tend)
    src, direct = integrated_law(state, tend)
    en = energies(state)
    qmax = float(np.max(np.abs(q)))
    hmax = float(np.max(np.abs(h)))
    divu_l1 = g.integrate(np.abs(g.div(state.u)))
    qb = qmax if (q0_maxnorm is None or state.tag != "ii-euler") else q0_maxnorm
    return BudgetReport(
        t=float(state.t),
        H=g.integrate(h),
        E0=en["E0"],
        E=en["E"],
        E0B=en["E0B"],
        dHdt_source=src,
        dHdt_direct=direct,
        q_maxnorm=qmax,
        residual_maxnorm=float(np.max(np.abs(r))),
        residual_l2=float(np.sqrt(g.integrate(r * r))),
        bound_rhs=growth_bound_rhs(state.tag, qb, en["E0"], hmax, divu_l1),
        divu_l1=divu_l1,
        mass=g.integrate(state.rho),
        H_classic=g.integrate(classic_helicity_density(state)),
        h_maxnorm=hmax,
    )


@dataclass
class TimeSeries:
    system: str
    n: int
    L: float
    reports: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.reports], dtype=float)

    def fill_dHdt_series(self) -> np.ndarray:
        """Centered (second-order, non-uniform) time difference of H."""
        t, H = self.column("t"), self.column("H")
        if len(t) < 2:
            d = np.full(len(t), np.nan)
        else:
            d = np.gradient(H, t, edge_order=2 if len(t) > 2 else 1)
        for r, v in zip(self.reports, d):
            r.dHdt_series = float(v)
        return d


@dataclass
class GrowthCheck:
    passed: bool
    margin: float
    bound: float
    dHdt: float


def growth_bound_check(report: BudgetReport, q0_maxnorm: float, h_maxnorm: Optional[float] = None, system: str = "ii-euler", rtol: float = 1e-8, atol: Optional[float] = None) -> GrowthCheck:
    """Check ``|dH/dt|`` against the ii-euler or comp-euler growth bound."""
    if system == "ii-euler":
        bound = 2.0 * q0_maxnorm * report.E0
    elif system == "comp-euler":
        hm = report.h_maxnorm if h_maxnorm is None else h_maxnorm
        bound = 2.0 * report.q_maxnorm * report.E0 + 2.0 * hm * report.divu_l1
    else:
        raise ValueError(f"no growth bound for {system}")
    if atol is None:
        atol = 1e-12 * max(report.E0, 1e-300)
    dh = abs(report.dHdt_source)
    margin = bound - dh
    return GrowthCheck(passed=margin >= -(rtol * bound + atol), margin=margin, bound=bound, dHdt=dh)


@dataclass
class LambdaReport:
    T: float
    mean_abs_dHdt: float
    varrho0: float
    E0: float
    q0_maxnorm: float
    lambdaH_inv: float
    lambdaH_inv_bound: float
    bound_checked: bool = True
    passed: bool = True


def lambda_from_values(t, dhdt, E0: float, varrho0: float, q0_maxnorm: float, T: Optional[float] = None, check: bool = True, rtol: float = 1e-8) -> LambdaReport:
    t = np.asarray(t, dtype=float)
    a = np.abs(np.asarray(dhdt, dtype=float))
    if t.size == 0:
        raise ValueError("empty time series")
    if T is not None:
        keep = t <= t[0] + T * (1 + 1e-12)
        t, a = t[keep], a[keep]
    window = float(t[-1] - t[0])
    if t.size == 1 or window == 0.0:
        mean = float(a[0])
    else:
        mean = float(trapezoid(a, t) / window)
    if mean == 0.0:
        lam = 0.0
    elif E0 <= 0 or varrho0 <= 0:
        lam = float("inf")
    else:
        lam = (mean / (np.sqrt(varrho0) * E0**1.5)) ** (2.0 / 7.0)
    bound = (4.0 / (E0 * varrho0)) ** (1.0 / 7.0) * q0_maxnorm ** (2.0 / 7.0) if E0 > 0 and varrho0 > 0 else float("inf")
    passed = (not check) or lam <= bound * (1 + rtol)
    return LambdaReport(T=window, mean_abs_dHdt=mean, varrho0=varrho0, E0=E0, q0_maxnorm=q0_maxnorm,
                        lambdaH_inv=float(lam), lambdaH_inv_bound=float(bound), bound_checked=check, passed=bool(passed))


def lambda_H(series: TimeSeries, q0_maxnorm: Optional[float] = None, T: Optional[float] = None) -> LambdaReport:
    """Inverse helicity length scale and its ``||q0||^(2/7)`` bound.

    ``E0`` and the mean density come from the first sample. The bound is only
    asserted for ii-euler.
    """
    if not series.reports:
        raise ValueError("empty time series")
    r0 = series.reports[0]
    q0 = r0.q_maxnorm if q0_maxnorm is None else q0_maxnorm
    return lambda_from_values(
        series.column("t"),
        series.column("dHdt_source"),
        E0=r0.E0,
        varrho0=r0.mass / series.L**3,
        q0_maxnorm=q0,
        T=T,
        check=series.system == "ii-euler",
    )
