"""Pseudo-spectral solvers and local helicity budget diagnostics for
barotropic, variable-density incompressible, compressible and MHD flows."""
from .spectral import Grid, make_grid
from .systems import SYSTEMS, Eos, SystemState, Tendency, rhs, rk4_step, cfl_dt
from .initial import initial_state, canonical_state, default_eos
from .config import RunConfig, load_config
from .runner import run

__all__ = [
    "Grid", "make_grid", "SYSTEMS", "Eos", "SystemState", "Tendency", "rhs", "rk4_step", "cfl_dt",
    "initial_state", "canonical_state", "default_eos", "RunConfig", "load_config", "run",
]
__version__ = "0.1.0"
