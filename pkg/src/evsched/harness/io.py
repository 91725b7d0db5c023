"""Scenario files and CSV schemas.

A scenario is a YAML document of scalars that references two CSV series
(non-EV demand in kW, ambient temperature in C), each with header
``slot,value`` and 1-based slots. Relative CSV paths resolve against the
YAML file's directory.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import yaml

from ..errors import ScenarioError
from ..model import StateTrace, ThermalParams
from ..problem import ChargingProfile, MemorylessCost, Scenario

SCENARIO_KEYS = {"slots", "delta_h", "nominal_kw", "v_max", "joule_k", "demands_kwh",
                 "nonev_csv", "ambient_csv", "thermal", "memoryless"}
REQUIRED_KEYS = {"slots", "delta_h", "nominal_kw", "v_max", "demands_kwh", "nonev_csv", "ambient_csv"}

PROFILE_HEADER = ["ev", "slot", "kw"]
TRACE_HEADER = ["slot", "load_pu", "temp_c", "faa", "joule_kwh"]
DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def default_scenario_path() -> Path:
    return DATA_DIR / "evening_peak.yaml"


def _fmt(x: float) -> str:
    return repr(float(x))


def read_series(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read series: {exc}", path=path) from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["slot", "value"]:
        raise ScenarioError("header must be 'slot,value'", line=1, path=path)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ScenarioError(f"expected 2 fields, got {len(row)}", line=lineno, path=path)
        try:
            slot, value = int(row[0]), float(row[1])
        except ValueError as exc:
            raise ScenarioError(f"unparsable row {row!r}", line=lineno, path=path) from exc
        if slot != len(values) + 1:
            raise ScenarioError(f"slot {slot} out of sequence, expected {len(values) + 1}", line=lineno, path=path)
        if not math.isfinite(value):
            raise ScenarioError(f"non-finite value {row[1]!r}", line=lineno, path=path)
        values.append(value)
    return np.array(values)


def write_series(path, values: Iterable[float]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "value"])
        for t, x in enumerate(values, start=1):
            w.writerow([t, _fmt(x)])


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", path=path) from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError(f"YAML parse error: {getattr(exc, 'problem', exc)}", line=line, path=path) from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping", path=path)
    unknown = set(doc) - SCENARIO_KEYS
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)}", path=path)
    missing = REQUIRED_KEYS - set(doc)
    if missing:
        raise ScenarioError(f"missing keys {sorted(missing)}", path=path)

    nonev = read_series(path.parent / doc["nonev_csv"])
    ambient = read_series(path.parent / doc["ambient_csv"])
    slots = doc["slots"]
    for name, series in (("non-EV demand", nonev), ("ambient", ambient)):
        if len(series) != slots:
            raise ScenarioError(f"{name} series has {len(series)} slots, scenario declares {slots}", path=path)
    try:
        thermal = ThermalParams(**(doc.get("thermal") or {}))
        memoryless = MemorylessCost(**(doc.get("memoryless") or {}))
        return Scenario(
            delta_h=float(doc["delta_h"]),
            demands=np.array(doc["demands_kwh"], dtype=float).reshape(-1),
            v_max=float(doc["v_max"]),
            nominal_kw=float(doc["nominal_kw"]),
            nonev_kw=nonev,
            ambient=ambient,
            thermal=thermal,
            memoryless=memoryless,
            joule_k=float(doc.get("joule_k", 0.01)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}", path=path) from exc


def save_scenario(s: Scenario, path) -> Path:
    """Write ``s`` as YAML plus two sibling CSVs named after the YAML stem."""
    path = Path(path)
    nonev_name = f"{path.stem}_nonev.csv"
    ambient_name = f"{path.stem}_ambient.csv"
    write_series(path.parent / nonev_name, s.nonev_kw)
    write_series(path.parent / ambient_name, s.ambient)
    p = s.thermal
    doc = {
        "slots": s.T,
        "delta_h": float(s.delta_h),
        "nominal_kw": float(s.nominal_kw),
        "v_max": float(s.v_max),
        "joule_k": float(s.joule_k),
        "demands_kwh": [float(d) for d in s.demands],
        "nonev_csv": nonev_name,
        "ambient_csv": ambient_name,
        "thermal": {k: float(getattr(p, k)) for k in
                    ("a", "b1", "b2", "amb_gain", "amb_offset", "x0", "u0", "x_max", "alpha", "beta")},
        "memoryless": {"kind": s.memoryless.kind, "coefficient": float(s.memoryless.coefficient),
                       "fold_beta": bool(s.memoryless.fold_beta)},
    }
    path.write_text(yaml.safe_dump(doc, sort_keys=False))
    return path


def write_profile(profile: ChargingProfile, path_or_buf):
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_HEADER)
        for i, row in enumerate(profile.v, start=1):
            for t, kw in enumerate(row, start=1):
                w.writerow([i, t, _fmt(kw)])

    if hasattr(path_or_buf, "write"):
        emit(path_or_buf)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            emit(fh)


def read_profile(path, delta_h: float, shape: Optional[tuple] = None) -> ChargingProfile:
    path = Path(path)
    rows = list(csv.reader(io.StringIO(path.read_text())))
    if not rows or [c.strip() for c in rows[0]] != PROFILE_HEADER:
        raise ScenarioError("header must be 'ev,slot,kw'", line=1, path=path)
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            entries.append((int(row[0]), int(row[1]), float(row[2])))
        except (ValueError, IndexError) as exc:
            raise ScenarioError(f"unparsable row {row!r}", line=lineno, path=path) from exc
    n_ev = max((e for e, _, _ in entries), default=0)
    n_slot = max((t for _, t, _ in entries), default=0)
    if shape is not None:
        n_ev, n_slot = shape
    v = np.zeros((n_ev, n_slot))
    for lineno, (i, t, kw) in enumerate(entries, start=2):
        if not (1 <= i <= n_ev and 1 <= t <= n_slot):
            raise ScenarioError(f"entry (ev={i}, slot={t}) outside {n_ev} x {n_slot}", line=lineno, path=path)
        v[i - 1, t - 1] = kw
    try:
        return ChargingProfile(v, delta_h)
    except ValueError as exc:
        raise ScenarioError(f"invalid profile: {exc}", path=path) from exc


def write_trace(u_pu: np.ndarray, trace: StateTrace, path_or_buf):
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for t in range(len(trace.temps)):
            w.writerow([t + 1, _fmt(u_pu[t]), _fmt(trace.temps[t]), _fmt(trace.faa[t]), _fmt(trace.joule[t])])

    if hasattr(path_or_buf, "write"):
        emit(path_or_buf)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            emit(fh)


def read_trace(path_or_text) -> dict:
    text = path_or_text if "\n" in str(path_or_text) else Path(path_or_text).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != TRACE_HEADER:
        raise ScenarioError("header must be " + ",".join(TRACE_HEADER), line=1)
    cols = list(zip(*rows[1:]))
    out = {"slot": np.array(cols[0], dtype=int)}
    for name, col in zip(TRACE_HEADER[1:], cols[1:]):
        out[name] = np.array(col, dtype=float)
    return out
