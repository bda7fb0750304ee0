"""Prognostic states, equations of state, right-hand sides and time stepping.

Four systems are supported:

``baro-euler``  barotropic compressible Euler, polytropic ``P = K rho^gamma``
``ii-euler``    inhomogeneous incompressible Euler (variable density, div u = 0)
``comp-euler``  compressible Euler with specific internal energy, ideal gas
``mhd``         ideal compressible MHD, ideal gas

Every nonlinear product is dealiased with the 2/3 rule. Advection is written
in rotational form ``u.grad u = omega x u + grad(|u|^2 / 2)``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .spectral import Grid

SYSTEMS = ("baro-euler", "ii-euler", "comp-euler", "mhd")


class SolverFault(RuntimeError):
    """Runtime failure of the solver (exit code 3 at the CLI)."""


class DensityFloorError(SolverFault):
    def __init__(self, message, location=None, value=None, stage=None):
        super().__init__(message)
        self.location = location
        self.value = value
        self.stage = stage

    def __str__(self):
        msg = super().__str__()
        if self.stage is not None:
            msg += f" (RK stage {self.stage})"
        return msg


class PressureSolveError(SolverFault):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class Eos:
    kind: str = "ideal-gas"
    gamma: float = 1.4
    K: float = 1.0

    def __post_init__(self):
        if self.kind not in ("polytropic", "ideal-gas"):
            raise ValueError(f"unknown equation of state {self.kind!r}")
        if not self.gamma > 1:
            raise ValueError("γ > 1 required")
        if not self.K > 0:
            raise ValueError("K > 0 required")

    def pressure(self, rho, e=None):
        if self.kind == "polytropic":
            return self.K * rho**self.gamma
        return (self.gamma - 1.0) * rho * e

    def enthalpy(self, rho):
        """Pressure function ``Pi(rho) = int_0^rho P'(s)/s ds`` (polytropic only)."""
        if self.kind != "polytropic":
            raise ValueError("Pi(rho) is only defined for a barotropic equation of state")
        g = self.gamma
        return g * self.K / (g - 1.0) * rho ** (g - 1.0)

    def internal_energy_density(self, rho, e=None):
        if self.kind == "polytropic":
            return self.pressure(rho) / (self.gamma - 1.0)
        return rho * e

    def sound_speed_sq(self, rho, e=None):
        g = self.gamma
        if self.kind == "polytropic":
            return g * self.K * rho ** (g - 1.0)
        return g * (g - 1.0) * e


@dataclass
class SystemState:
    tag: str
    grid: Grid
    rho: np.ndarray
    u: np.ndarray
    eos: Eos
    e: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    t: float = 0.0
    rho_floor: float = 1e-6

    def __post_init__(self):
        if self.tag not in SYSTEMS:
            raise ValueError(f"unknown system {self.tag!r}; expected one of {SYSTEMS}")
        if self.tag in ("comp-euler", "mhd") and self.e is None:
            raise ValueError(f"{self.tag} needs an internal energy field")
        if self.tag == "mhd" and self.B is None:
            raise ValueError("mhd needs a magnetic field")

    def replace(self, **kw) -> "SystemState":
        return dataclasses.replace(self, **kw)


@dataclass
class Tendency:
    """Instantaneous time derivatives of the prognostic fields.

    ``pressure`` carries the pressure used to build the tendency so that
    diagnostics never have to solve for it again.
    """

    rho: np.ndarray
    u: np.ndarray
    e: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    pressure: Optional[np.ndarray] = None
    pressure_iterations: int = 0


def check_floors(state: SystemState) -> None:
    rho = state.rho
    if not np.all(np.isfinite(rho)) or not np.all(np.isfinite(state.u)):
        raise DensityFloorError("non-finite state")
    imin = np.unravel_index(np.argmin(rho), rho.shape)
    if rho[imin] < state.rho_floor:
        raise DensityFloorError(
            f"density {rho[imin]:.3e} below floor {state.rho_floor:.1e} at grid index {tuple(int(i) for i in imin)}",
            location=imin,
            value=float(rho[imin]),
        )
    if state.e is not None:
        jmin = np.unravel_index(np.argmin(state.e), state.e.shape)
        if state.e[jmin] < 0:
            raise DensityFloorError(
                f"negative internal energy {state.e[jmin]:.3e} at grid index {tuple(int(i) for i in jmin)}",
                location=jmin,
                value=float(state.e[jmin]),
            )


def eos_pressure(state: SystemState) -> np.ndarray:
    """Pressure from the equation of state (not defined for ii-euler)."""
    if state.tag == "ii-euler":
        raise ValueError("ii-euler pressure comes from solve_pressure_ii, not an equation of state")
    check_floors(state)
    return state.eos.pressure(state.rho, state.e)


def _advection(g: Grid, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Dealiased ``u.grad u`` in rotational form."""
    return g.cross(w, u) + g.grad(g.dealias(0.5 * np.sum(u * u, axis=0)))


def rhs_baro(state: SystemState) -> Tendency:
    check_floors(state)
    g, rho, u = state.grid, state.rho, state.u
    w = g.curl(u)
    # rho^-1 grad P == grad Pi(rho) for a barotropic law
    du = -_advection(g, u, w) - g.grad(g.dealias(state.eos.enthalpy(rho)))
    drho = -g.div(g.mul(rho, u))
    return Tendency(rho=drho, u=du, pressure=state.eos.pressure(rho))


def pressure_source_ii(g: Grid, u: np.ndarray) -> np.ndarray:
    """``-(grad grad):(u u)``, evaluated as ``-div(u.grad u)`` with the discrete advection."""
    return -g.div(_advection(g, u, g.curl(u)))


def solve_pressure_ii(
    grid: Grid,
    rho: np.ndarray,
    u: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 500,
    source: Optional[np.ndarray] = None,
    return_info: bool = False,
):
    """Zero-mean ``P`` with ``div(rho^-1 grad P) = source``.

    Fixed point on the split ``rho^-1 = a + (rho^-1 - a)`` with ``a`` the
    mean of ``rho^-1``; each sweep inverts the constant-coefficient part
    spectrally.
    """
    g = grid
    if source is None:
        source = pressure_source_ii(g, u)
    # the iterate lives in the dealiased band; so must the source
    source = g.dealias(source)
    rinv = 1.0 / rho
    alpha = float(np.mean(rinv))
    var = rinv - alpha
    scale = float(np.max(np.abs(source)))
    k2 = g.k2.copy()
    k2[0, 0, 0] = 1.0
    if scale == 0.0:
        P = np.zeros(g.shape)
        return (P, 0, 0.0) if return_info else P

    P = np.zeros(g.shape)
    lap = np.zeros(g.shape)
    resid = np.inf
    for it in range(max_iter + 1):
        flux = g.div(g.dealias(var * g.grad(P)))
        # P stays inside the dealiased band, so alpha*lap + flux is the full operator
        resid = float(np.max(np.abs(alpha * lap + flux - source)))
        if resid <= tol * scale:
            return (P, it, resid) if return_info else P
        if it == max_iter:
            break
        ph = g.dealias_hat(-g.fft(source - flux) / (alpha * k2))
        ph[0, 0, 0] = 0.0
        P = g.ifft(ph)
        lap = g.ifft(-g.k2 * ph)
    raise PressureSolveError(
        f"pressure solve did not converge in {max_iter} iterations (residual {resid:.3e}, target {tol * scale:.3e})",
        residual=resid,
        iterations=max_iter,
    )


def rhs_ii(state: SystemState, tol: float = 1e-10, max_iter: int = 500) -> Tendency:
    check_floors(state)
    g, rho, u = state.grid, state.rho, state.u
    adv = _advection(g, u, g.curl(u))
    P, its, _ = solve_pressure_ii(g, rho, u, tol=tol, max_iter=max_iter, source=-g.div(adv), return_info=True)
    du = -adv - g.dealias(g.grad(P) / rho)
    drho = -g.dealias(np.sum(u * g.grad(rho), axis=0))
    return Tendency(rho=drho, u=du, pressure=P, pressure_iterations=its)


def _comp_parts(state: SystemState):
    g, rho, u, e = state.grid, state.rho, state.u, state.e
    P = state.eos.pressure(rho, e)
    rinv = 1.0 / rho
    du = -_advection(g, u, g.curl(u)) - g.dealias(rinv * g.grad(P))
    drho = -g.div(g.mul(rho, u))
    divu = g.div(u)
    de = -g.dealias(np.sum(u * g.grad(e), axis=0)) - g.dealias(rinv * P * divu)
    return P, rinv, du, drho, de


def rhs_comp(state: SystemState) -> Tendency:
    check_floors(state)
    P, _, du, drho, de = _comp_parts(state)
    return Tendency(rho=drho, u=du, e=de, pressure=P)


def rhs_mhd(state: SystemState) -> Tendency:
    check_floors(state)
    g, B = state.grid, state.B
    P, rinv, du, drho, de = _comp_parts(state)
    lorentz = g.dealias(rinv * np.cross(g.curl(B), B, axis=0))
    du = du + lorentz
    # curl form keeps div(dB/dt) at round-off
    dB = g.curl(g.cross(state.u, B))
    return Tendency(rho=drho, u=du, e=de, B=dB, pressure=P)


RHS: dict[str, Callable[[SystemState], Tendency]] = {
    "baro-euler": rhs_baro,
    "ii-euler": rhs_ii,
    "comp-euler": rhs_comp,
    "mhd": rhs_mhd,
}


def rhs(state: SystemState, **kw) -> Tendency:
    if state.tag == "ii-euler":
        return rhs_ii(state, **kw)
    return RHS[state.tag](state)


def _advance(state: SystemState, tend: Tendency, h: float, t: float) -> SystemState:
    return state.replace(
        rho=state.rho + h * tend.rho,
        u=state.u + h * tend.u,
        e=None if state.e is None else state.e + h * tend.e,
        B=None if state.B is None else state.B + h * tend.B,
        t=t,
    )


def rk4_step(
    state: SystemState,
    dt: float,
    rhs_fn: Optional[Callable[[SystemState], Tendency]] = None,
) -> SystemState:
    """One classical fourth-order Runge-Kutta step."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    f = rhs_fn or rhs
    stages = []
    s = state
    coeffs = (0.5, 0.5, 1.0)
    for i in range(4):
        try:
            k = f(s)
        except DensityFloorError as err:
            err.stage = i + 1
            raise
        stages.append(k)
        if i < 3:
            s = _advance(state, k, coeffs[i] * dt, state.t + coeffs[i] * dt)
    k1, k2, k3, k4 = stages

    def comb(name):
        a = getattr(k1, name)
        if a is None:
            return None
        return (a + 2.0 * getattr(k2, name) + 2.0 * getattr(k3, name) + getattr(k4, name)) / 6.0

    avg = Tendency(rho=comb("rho"), u=comb("u"), e=comb("e"), B=comb("B"))
    new = _advance(state, avg, dt, state.t + dt)
    try:
        check_floors(new)
    except DensityFloorError as err:
        err.stage = 4
        raise
    return new


def max_signal_speed(state: SystemState) -> float:
    speed = np.sqrt(np.sum(state.u**2, axis=0))
    if state.tag != "ii-euler":
        speed = speed + np.sqrt(state.eos.sound_speed_sq(state.rho, state.e))
    if state.B is not None:
        speed = speed + np.sqrt(np.sum(state.B**2, axis=0) / state.rho)
    return float(np.max(speed))


def cfl_dt(state: SystemState, cfl: float = 0.25, dt_max: float = 1.0) -> float:
    """``cfl * dx / max(|u| + c + c_A)``; ``dt_max`` when nothing moves."""
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    smax = max_signal_speed(state)
    if smax == 0.0:
        return dt_max
    return cfl * state.grid.dx / smax
