"""Initial-condition library.

All fields are evaluated on the grid and then projected onto the dealiased
band, so states start inside the resolved spectrum.

abc           ``u = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)``
              plus ``tg`` times Taylor-Green; ``rho = rho0 (1 + eps sin(axis))``;
              ``e = e0``; mhd adds ``B = b0 * u_ABC``
taylor-green  ``u = u0 (sin x cos y cos z, -cos x sin y cos z, 0)``, same density
acoustic      ``rho = rho0 (1 + eps sin(k x))``, ``u_x = eps c sin(k x)``,
              ``P = p0 (1 + gamma eps sin(k x))`` (right-running sound wave)
orszag-tang   ``u = u0 (-sin y, sin x, 0)``,
              ``B = b0 (-sin 2y + sin(z)/2, sin x + sin(z)/2, (sin x + sin y)/2)``,
              ``rho = rho0 (1 + eps sin z)``, uniform pressure ``p0``

``profile="inverse"`` replaces the density by ``rho0 / (1 + eps sin)`` and
``umod`` divides the velocity (and the Orszag-Tang field) by
``1 + umod sin(axis)``; both give fields with a geometric Fourier tail.
random        band-limited random fields (modes ``|k| <= kmax``) from ``seed``
uniform       constant ``rho0``, ``e0`` and velocity ``(ux, uy, uz)``
"""
from __future__ import annotations

import numpy as np

from .spectral import Grid
from .systems import Eos, SystemState

INITIAL_CONDITIONS = ("abc", "taylor-green", "acoustic", "orszag-tang", "random", "uniform")

_AXES = {"x": 0, "y": 1, "z": 2}


def abc_flow(grid: Grid, A=1.0, B=1.0, C=1.0) -> np.ndarray:
    x, y, z = grid.mesh()
    return np.stack(
        [
            A * np.sin(z) + C * np.cos(y),
            B * np.sin(x) + A * np.cos(z),
            C * np.sin(y) + B * np.cos(x),
        ]
    )


def taylor_green(grid: Grid, u0=1.0) -> np.ndarray:
    x, y, z = grid.mesh()
    return u0 * np.stack(
        [
            np.sin(x) * np.cos(y) * np.cos(z),
            -np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros(grid.shape),
        ]
    )


def modulated_density(grid: Grid, rho0=1.0, eps=0.0, axis="z", profile="sin") -> np.ndarray:
    """``rho0 (1 + eps sin)`` or, for ``profile="inverse"``, ``rho0 / (1 + eps sin)``.

    The inverse profile has a geometric Fourier tail, so products involving
    the density are never exactly resolved on a finite grid.
    """
    c = grid.mesh()[_AXES[axis]]
    if profile == "sin":
        return rho0 * (1.0 + eps * np.sin(c))
    if profile == "inverse":
        return rho0 / (1.0 + eps * np.sin(c))
    raise ValueError(f"unknown density profile {profile!r}")


def leray_project(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Remove the gradient part of ``u`` (constant-density projection)."""
    uh = grid.fft(u)
    kx, ky, kz = grid._tables["dk"]
    k2 = kx**2 + ky**2 + kz**2
    k2[k2 == 0] = 1.0
    kdotu = (kx * uh[0] + ky * uh[1] + kz * uh[2]) / k2
    uh = np.stack([uh[0] - kx * kdotu, uh[1] - ky * kdotu, uh[2] - kz * kdotu])
    return grid.ifft(uh)


def _random_field(grid: Grid, rng: np.random.Generator, kmax: int, amp: float) -> np.ndarray:
    x, y, z = grid.coords()
    out = np.zeros(grid.shape)
    for kx in range(-kmax, kmax + 1):
        for ky in range(-kmax, kmax + 1):
            for kz in range(0, kmax + 1):
                if kx == ky == kz == 0:
                    continue
                a, b = rng.normal(size=2)
                phase = kx * x + ky * y + kz * z
                out = out + a * np.cos(phase) + b * np.sin(phase)
    return amp * out / max(np.max(np.abs(out)), 1e-300)


def _fields(name: str, grid: Grid, eos: Eos, p: dict):
    """Raw ``rho, u, e, B`` for a named initial condition."""
    rho0 = p.get("rho0", 1.0)
    eps = p.get("eps", 0.0)
    axis = p.get("axis", "z")
    e = B = None
    if name == "abc":
        u = abc_flow(grid, p.get("A", 1.0), p.get("B", 1.0), p.get("C", 1.0))
        B = p.get("b0", 0.0) * u
        if p.get("tg", 0.0):
            u = u + taylor_green(grid, p["tg"])
        rho = modulated_density(grid, rho0, eps, axis, p.get("profile", "sin"))
        e = np.full(grid.shape, p.get("e0", 1.0))
    elif name == "taylor-green":
        u = taylor_green(grid, p.get("u0", 1.0))
        rho = modulated_density(grid, rho0, eps, axis, p.get("profile", "sin"))
        e = np.full(grid.shape, p.get("e0", 1.0))
        B = np.zeros_like(u)
    elif name == "acoustic":
        x = grid.mesh()[0]
        k = p.get("k", 1)
        s = np.sin(k * x * 2 * np.pi / grid.L)
        g = eos.gamma
        if eos.kind == "polytropic":
            p0 = eos.K * rho0**g
        else:
            p0 = p.get("p0", rho0 / g)
        c = np.sqrt(g * p0 / rho0)
        rho = rho0 * (1.0 + eps * s)
        u = np.zeros((3,) + grid.shape)
        u[0] = eps * c * s
        P = p0 * (1.0 + g * eps * s)
        e = P / ((g - 1.0) * rho)
        B = np.zeros_like(u)
    elif name == "orszag-tang":
        x, y, z = grid.mesh()
        u0, b0 = p.get("u0", 1.0), p.get("b0", 0.8)
        u = u0 * np.stack([-np.sin(y), np.sin(x), np.zeros(grid.shape)])
        B = b0 * np.stack(
            [
                -np.sin(2 * y) + 0.5 * np.sin(z),
                np.sin(x) + 0.5 * np.sin(z),
                0.5 * (np.sin(x) + np.sin(y)),
            ]
        )
        rho = modulated_density(grid, rho0, eps, "z", p.get("profile", "sin"))
        e = p.get("p0", 2.0) / ((eos.gamma - 1.0) * rho)
    elif name == "random":
        rng = np.random.default_rng(int(p.get("seed", 0)))
        kmax = int(p.get("kmax", 2))
        u = np.stack([_random_field(grid, rng, kmax, p.get("u0", 1.0)) for _ in range(3)])
        rho = rho0 * (1.0 + _random_field(grid, rng, kmax, eps if eps else 0.2))
        e = p.get("e0", 1.0) * (1.0 + _random_field(grid, rng, kmax, 0.2))
        B = np.stack([_random_field(grid, rng, kmax, p.get("b0", 0.5)) for _ in range(3)])
        B = leray_project(grid, B)
    elif name == "uniform":
        u = np.zeros((3,) + grid.shape)
        for i, key in enumerate(("ux", "uy", "uz")):
            u[i] = p.get(key, 0.0)
        rho = np.full(grid.shape, rho0)
        e = np.full(grid.shape, p.get("e0", 1.0))
        B = np.zeros_like(u)
        for i, key in enumerate(("bx", "by", "bz")):
            B[i] = p.get(key, 0.0)
    else:
        raise ValueError(f"unknown initial condition {name!r}; expected one of {INITIAL_CONDITIONS}")
    umod = p.get("umod", 0.0)
    if umod:
        # broadband velocity (and field) modulation; projected back to div-free later
        shape = 1.0 / (1.0 + umod * np.sin(grid.mesh()[_AXES[axis]]))
        u = u * shape
        if name == "orszag-tang":
            B = B * shape
    return rho, u, e, B


def initial_state(
    system: str,
    grid: Grid,
    eos: Eos,
    name: str = "abc",
    rho_floor: float = 1e-6,
    **params,
) -> SystemState:
    rho, u, e, B = _fields(name, grid, eos, params)
    rho = grid.dealias(rho)
    u = grid.dealias(u)
    if system == "ii-euler":
        u = leray_project(grid, u)
    kw = {}
    if system in ("comp-euler", "mhd"):
        kw["e"] = grid.dealias(e)
    if system == "mhd":
        kw["B"] = leray_project(grid, grid.dealias(B))
    return SystemState(tag=system, grid=grid, rho=rho, u=u, eos=eos, rho_floor=rho_floor, **kw)


def default_eos(system: str, gamma=None, K=1.0) -> Eos:
    """Polytropic for baro-euler, ideal gas for the others."""
    if system == "baro-euler":
        return Eos("polytropic", 2.0 if gamma is None else gamma, K)
    return Eos("ideal-gas", 1.4 if gamma is None else gamma, K)


# Canonical initial data for the resolution-refinement checks. The inverse
# density profile keeps a truncation tail at n = 32 that is gone at n = 64;
# with purely trigonometric data every budget closes to round-off on both grids.
CANONICAL = {
    "baro-euler": dict(eos=("polytropic", 2.0, 1.0), ic="abc", params=dict(eps=0.3, axis="x", profile="inverse", umod=0.3)),
    "ii-euler": dict(eos=("ideal-gas", 1.4, 1.0), ic="abc", params=dict(eps=0.3, axis="z", profile="inverse", umod=0.3)),
    "comp-euler": dict(eos=("ideal-gas", 1.4, 1.0), ic="abc", params=dict(eps=0.3, axis="z", profile="inverse", umod=0.3, e0=2.0)),
    "mhd": dict(eos=("ideal-gas", 5.0 / 3.0, 1.0), ic="orszag-tang", params=dict(eps=0.3, profile="inverse", umod=0.3, p0=2.0)),
}


def canonical_state(system: str, grid: Grid) -> SystemState:
    c = CANONICAL[system]
    return initial_state(system, grid, Eos(*c["eos"]), c["ic"], **c["params"])
