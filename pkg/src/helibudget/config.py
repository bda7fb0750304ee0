"""Run configuration: INI-style text files with one section per concern.

Sections and keys (defaults in brackets)::

    [system]      tag
    [grid]        n, L [2*pi]
    [eos]         kind [polytropic for baro-euler, else ideal-gas], gamma, K [1]
    [initial]     name [abc] plus condition parameters
    [run]         cfl [0.25], t_end [0], stride [1], dt, dt_max [1], T
    [tolerances]  pressure_tol [1e-10], max_iter [500], rho_floor [1e-6],
                  bound_rtol [1e-8]

A file without section headers is accepted as a flat list of the same keys
(``system`` stands for ``[system] tag``).
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .initial import INITIAL_CONDITIONS, initial_state
from .spectral import Grid
from .systems import SYSTEMS, Eos, SystemState

_FLOAT, _INT, _STR = float, int, str

# initial-condition parameters and their types
IC_KEYS = {
    "rho0": _FLOAT, "eps": _FLOAT, "axis": _STR, "profile": _STR, "e0": _FLOAT, "umod": _FLOAT,
    "A": _FLOAT, "B": _FLOAT, "C": _FLOAT, "b0": _FLOAT, "tg": _FLOAT,
    "u0": _FLOAT, "k": _INT, "p0": _FLOAT, "seed": _INT, "kmax": _INT,
    "ux": _FLOAT, "uy": _FLOAT, "uz": _FLOAT, "bx": _FLOAT, "by": _FLOAT, "bz": _FLOAT,
}

SCHEMA = {
    "system": {"tag": _STR},
    "grid": {"n": _INT, "L": _FLOAT},
    "eos": {"kind": _STR, "gamma": _FLOAT, "K": _FLOAT},
    "initial": {"name": _STR, **IC_KEYS},
    "run": {"cfl": _FLOAT, "t_end": _FLOAT, "stride": _INT, "dt": _FLOAT, "dt_max": _FLOAT, "T": _FLOAT},
    "tolerances": {"pressure_tol": _FLOAT, "max_iter": _INT, "rho_floor": _FLOAT, "bound_rtol": _FLOAT},
}

_FLAT_ALIASES = {"system": ("system", "tag")}


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key, self.line = key, line
        where = f" (line {line})" if line else ""
        super().__init__(f"{message}{where}")


@dataclass
class RunConfig:
    system: str
    n: int
    L: float = 2 * math.pi
    eos_kind: Optional[str] = None
    gamma: Optional[float] = None
    K: float = 1.0
    ic: str = "abc"
    ic_params: dict = field(default_factory=dict)
    cfl: float = 0.25
    t_end: float = 0.0
    stride: int = 1
    dt: Optional[float] = None
    dt_max: float = 1.0
    T: Optional[float] = None
    pressure_tol: float = 1e-10
    max_iter: int = 500
    rho_floor: float = 1e-6
    bound_rtol: float = 1e-8

    def __post_init__(self):
        if self.eos_kind is None:
            self.eos_kind = "polytropic" if self.system == "baro-euler" else "ideal-gas"
        if self.gamma is None:
            self.gamma = 2.0 if self.system == "baro-euler" else 1.4
        self.validate()

    def validate(self) -> None:
        def need(ok, msg, key):
            if not ok:
                raise ConfigError(msg, key)

        need(self.system in SYSTEMS, f"system must be one of {SYSTEMS}, got {self.system!r}", "tag")
        need(self.n >= 8 and self.n % 2 == 0, "n must be an even integer >= 8", "n")
        need(self.L > 0, "L > 0 required", "L")
        need(self.eos_kind in ("polytropic", "ideal-gas"), "kind must be polytropic or ideal-gas", "kind")
        need(self.system != "baro-euler" or self.eos_kind == "polytropic", "baro-euler needs a polytropic eos", "kind")
        need(self.gamma > 1, "γ > 1 required", "gamma")
        need(self.K > 0, "K > 0 required", "K")
        need(self.ic in INITIAL_CONDITIONS, f"initial name must be one of {INITIAL_CONDITIONS}", "name")
        need(0 < self.cfl <= 1, "0 < cfl <= 1 required", "cfl")
        need(self.t_end >= 0, "t_end >= 0 required", "t_end")
        need(self.stride >= 1, "stride >= 1 required", "stride")
        need(self.dt is None or self.dt > 0, "dt > 0 required", "dt")
        need(self.dt_max > 0, "dt_max > 0 required", "dt_max")
        need(self.T is None or self.T > 0, "T > 0 required", "T")
        need(self.pressure_tol > 0, "pressure_tol > 0 required", "pressure_tol")
        need(self.max_iter >= 1, "max_iter >= 1 required", "max_iter")
        need(self.rho_floor > 0, "rho_floor > 0 required", "rho_floor")
        need(self.bound_rtol >= 0, "bound_rtol >= 0 required", "bound_rtol")
        p = self.ic_params
        need(p.get("axis", "z") in ("x", "y", "z"), "axis must be x, y or z", "axis")
        need(p.get("profile", "sin") in ("sin", "inverse"), "profile must be sin or inverse", "profile")
        need(0 <= abs(p.get("eps", 0.0)) < 1, "|eps| < 1 required", "eps")
        need(0 <= abs(p.get("umod", 0.0)) < 1, "|umod| < 1 required", "umod")
        need(p.get("rho0", 1.0) > 0, "rho0 > 0 required", "rho0")
        need(p.get("kmax", 1) >= 1, "kmax >= 1 required", "kmax")

    def grid(self, workers: int = 1) -> Grid:
        return Grid(self.n, self.L, workers)

    def eos(self) -> Eos:
        return Eos(self.eos_kind, self.gamma, self.K)

    def initial_state(self, workers: int = 1) -> SystemState:
        return initial_state(self.system, self.grid(workers), self.eos(), self.ic, rho_floor=self.rho_floor, **self.ic_params)

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "ic_params"}
        d.update({f"ic.{k}": v for k, v in sorted(self.ic_params.items())})
        return d


_FIELD_OF = {"tag": "system", "kind": "eos_kind", "name": "ic"}


def _convert(kind, key, raw, line):
    try:
        if kind is _INT:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind is _FLOAT:
            return float(eval_number(raw))
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}", key, line) from None


def eval_number(raw: str) -> float:
    """Float literal, optionally a multiple of ``pi`` (``2*pi``, ``pi``)."""
    s = raw.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([-+0-9.e]*)\*?pi", s)
    if m:
        c = m.group(1)
        return (float(c) if c not in ("", "+", "-") else float(c + "1")) * math.pi
    return float(s)


def _line_numbers(text: str) -> dict:
    lines = {}
    section = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s and not s.startswith(("#", ";")):
            lines[(section, s.split("=", 1)[0].strip())] = i
    return lines


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    first = next((ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith(("#", ";"))), "")
    flat = not first.startswith("[")
    body = "[__flat__]\n" + text if flat else text
    cp = configparser.ConfigParser(interpolation=None, strict=True, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(body, source=source)
    except configparser.ParsingError as err:
        line = err.errors[0][0] - (1 if flat else 0) if err.errors else None
        raise ConfigError(f"{source}: malformed line", None, line) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as err:
        line = err.lineno - (1 if flat else 0) if err.lineno else None
        raise ConfigError(f"{source}: {err.message if hasattr(err, 'message') else err}", getattr(err, "option", None), line) from None
    except configparser.Error as err:
        raise ConfigError(f"{source}: {err}") from None
    lines = _line_numbers(text)
    values, ic_params = {}, {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            line = lines.get((None if flat else section, key))
            if flat:
                if key in _FLAT_ALIASES:
                    sec, name = _FLAT_ALIASES[key]
                else:
                    owners = [s for s, keys in SCHEMA.items() if key in keys]
                    if not owners:
                        raise ConfigError(f"unknown key {key!r}", key, line)
                    sec, name = owners[0], key
            else:
                if section not in SCHEMA:
                    raise ConfigError(f"unknown section [{section}]", section, line)
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]", key, line)
                sec, name = section, key
            v = _convert(SCHEMA[sec][name], name, raw, line)
            if sec == "initial" and name != "name":
                ic_params[name] = v
            else:
                values[_FIELD_OF.get(name, name)] = v
    for required in ("system", "n"):
        if required not in values:
            raise ConfigError(f"missing required key {'tag' if required == 'system' else required!r}", required)
    try:
        return RunConfig(ic_params=ic_params, **values)
    except ConfigError as err:
        line = next((ln for (s, k), ln in lines.items() if k == err.key or (err.key == "tag" and k == "system")), None)
        raise ConfigError(str(err), err.key, line) from None


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), str(p))
