"""Time-series CSV, binary snapshots and key-value report files."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path
from typing import Optional

import numpy as np

from .diagnostics import CSV_COLUMNS, BudgetReport, LambdaReport, TimeSeries
from .spectral import Grid
from .systems import Eos, SystemState

SCHEMA_VERSION = 1
SNAPSHOT_MAGIC = "# helibudget snapshot"


class FormatError(ValueError):
    pass


def fmt(v) -> str:
    """17 significant digits; empty for missing values."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".17g")


def _header_line(series: TimeSeries) -> str:
    meta = {"schema": SCHEMA_VERSION, "system": series.system, "n": series.n, "L": fmt(series.L)}
    for k in sorted(series.meta):
        meta[k] = fmt(series.meta[k]) if isinstance(series.meta[k], float) else series.meta[k]
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items())


def write_timeseries(series: TimeSeries, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(_header_line(series) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in series.reports:
            row = r.row()
            w.writerow([fmt(row[c]) for c in CSV_COLUMNS])
    return path


def _parse_meta(line: str) -> dict:
    meta = {}
    for tok in line.lstrip("#").split():
        if "=" not in tok:
            raise FormatError(f"bad header token {tok!r}")
        k, v = tok.split("=", 1)
        meta[k] = v
    return meta


def read_timeseries(path) -> TimeSeries:
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise FormatError(f"{path}: missing schema comment line")
        meta = _parse_meta(first.strip())
        if meta.get("schema") != str(SCHEMA_VERSION):
            raise FormatError(f"{path}: unsupported schema {meta.get('schema')!r}")
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise FormatError(f"{path}: header row must be {','.join(CSV_COLUMNS)}")
    reports = []
    for i, row in enumerate(rows[1:], start=3):
        if len(row) != len(CSV_COLUMNS):
            raise FormatError(f"{path}: line {i} has {len(row)} cells, expected {len(CSV_COLUMNS)}")
        try:
            vals = {c: (None if s == "" else float(s)) for c, s in zip(CSV_COLUMNS, row)}
        except ValueError as err:
            raise FormatError(f"{path}: line {i}: {err}") from None
        reports.append(BudgetReport(**vals))
    try:
        system, n, L = meta.pop("system"), int(meta.pop("n")), float(meta.pop("L"))
    except (KeyError, ValueError) as err:
        raise FormatError(f"{path}: incomplete schema line ({err})") from None
    meta.pop("schema")
    return TimeSeries(system=system, n=n, L=L, reports=reports, meta=meta)


# snapshots -----------------------------------------------------------------


def state_fields(state: SystemState) -> dict:
    out = {"rho": state.rho, "ux": state.u[0], "uy": state.u[1], "uz": state.u[2]}
    if state.e is not None:
        out["e"] = state.e
    if state.B is not None:
        out.update(Bx=state.B[0], By=state.B[1], Bz=state.B[2])
    return out


@dataclass
class Snapshot:
    system: str
    n: int
    L: float
    t: float
    fields: dict

    def to_state(self, eos: Eos, workers: int = 1) -> SystemState:
        f = self.fields
        kw = {}
        if "e" in f:
            kw["e"] = f["e"]
        if "Bx" in f:
            kw["B"] = np.stack([f["Bx"], f["By"], f["Bz"]])
        return SystemState(tag=self.system, grid=Grid(self.n, self.L, workers), rho=f["rho"],
                           u=np.stack([f["ux"], f["uy"], f["uz"]]), eos=eos, t=self.t, **kw)


def write_snapshot(state: SystemState, path) -> Path:
    """Text header terminated by ``END``, then little-endian float64, x fastest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    f = state_fields(state)
    n = state.grid.n
    header = [
        SNAPSHOT_MAGIC,
        f"system = {state.tag}",
        f"n = {n}",
        f"L = {fmt(state.grid.L)}",
        f"t = {fmt(state.t)}",
        f"fields = {' '.join(f)}",
        "byte_order = little",
        "dtype = float64",
        f"count = {len(f) * n**3}",
        "layout = x-fastest",
        "END",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        for a in f.values():
            fh.write(np.asarray(a, dtype="<f8").ravel(order="F").tobytes())
    return path


def read_snapshot(path) -> Snapshot:
    data = Path(path).read_bytes()
    marker = b"\nEND\n"
    end = data.find(marker)
    if not data.startswith(SNAPSHOT_MAGIC.encode()) or end < 0:
        raise FormatError(f"{path}: not a snapshot file")
    head = {}
    for line in data[:end].decode("ascii").splitlines()[1:]:
        k, _, v = line.partition("=")
        head[k.strip()] = v.strip()
    if head.get("byte_order") != "little" or head.get("dtype") != "float64" or head.get("layout") != "x-fastest":
        raise FormatError(f"{path}: unsupported encoding {head}")
    n, count = int(head["n"]), int(head["count"])
    names = head["fields"].split()
    payload = data[end + len(marker):]
    if len(payload) != count * 8 or count != len(names) * n**3:
        raise FormatError(f"{path}: payload has {len(payload)} bytes, header declares {count} values")
    flat = np.frombuffer(payload, dtype="<f8").astype(float)
    arrays = {nm: flat[i * n**3:(i + 1) * n**3].reshape((n, n, n), order="F") for i, nm in enumerate(names)}
    return Snapshot(head["system"], n, float(head["L"]), float(head["t"]), arrays)


# lambda report -------------------------------------------------------------


def write_lambda_report(rep: LambdaReport, path, extra: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for f in dc_fields(rep):
        v = getattr(rep, f.name)
        lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else fmt(v)}")
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_key_values(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out
