"""State, branch, and trace serialization: CSV payloads with JSON sidecars.

Floats are written with 17 significant decimal digits, which round-trips
IEEE doubles bit-exactly; everything stays human-diffable and language
neutral.  A state snapshot is ``<path>`` (CSV, header ``x,eta,u``) plus
``<path>.meta.json`` carrying parameters, grid, speed, and diagnostics.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .dcurve import BRANCH_COLUMNS, Branch
from .evolution import EvolutionTrace
from .model import ModelParams
from .spectral import StatePair, make_grid

__all__ = [
    "StateFileError",
    "write_state",
    "read_state",
    "write_branch",
    "read_branch",
    "write_trace",
    "write_report",
    "write_dat",
    "FLOAT_FMT",
]

FLOAT_FMT = "{:.16e}"  # 17 significant digits: exact double round trip


class StateFileError(ValueError):
    """Schema or consistency problem in a serialized state/branch file."""


def _fmt(v: float) -> str:
    return FLOAT_FMT.format(float(v))


def _meta_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_state(path, U: StatePair, params: ModelParams, omega: float | None = None,
                extra: dict | None = None) -> Path:
    """Write a state snapshot; returns the CSV path."""
    path = Path(path)
    g = U.grid
    with path.open("w") as fh:
        fh.write("x,eta,u\n")
        for x, e, u in zip(g.x, U.first.values, U.second.values):
            fh.write(f"{_fmt(x)},{_fmt(e)},{_fmt(u)}\n")
    meta = {
        "format": "wavelab-state",
        "version": 1,
        "params": {"a": params.a, "b": params.b, "c": params.c, "p": params.p},
        "grid": {"L": g.L, "N": g.N},
        "omega": omega,
    }
    if extra:
        meta.update(extra)
    _meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_state(path) -> tuple[StatePair, dict, list[str]]:
    """Load a snapshot; returns (state, meta, warnings).

    Warnings report meta/payload inconsistencies (grid mismatch is an error;
    a stale recorded residual only warns).
    """
    path = Path(path)
    if not path.exists():
        raise StateFileError(f"state file not found: {path}")
    meta_file = _meta_path(path)
    if not meta_file.exists():
        raise StateFileError(f"missing sidecar {meta_file}")
    try:
        meta = json.loads(meta_file.read_text())
    except json.JSONDecodeError as exc:
        raise StateFileError(f"malformed sidecar {meta_file}: {exc}") from exc

    xs, es, us = [], [], []
    with path.open() as fh:
        header = fh.readline().strip()
        if header != "x,eta,u":
            raise StateFileError(f"{path}: expected header 'x,eta,u', got {header!r}")
        for row_idx, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise StateFileError(f"{path}: row {row_idx}: expected 3 columns, got {len(parts)}")
            try:
                x, e, u = (float(p) for p in parts)
            except ValueError as exc:
                raise StateFileError(f"{path}: row {row_idx}: {exc}") from exc
            xs.append(x)
            es.append(e)
            us.append(u)

    grid_meta = meta.get("grid", {})
    N, L = grid_meta.get("N"), grid_meta.get("L")
    if N is None or L is None:
        raise StateFileError(f"{meta_file}: missing grid metadata")
    if len(xs) != N:
        raise StateFileError(f"{path}: {len(xs)} rows but sidecar says N = {N}")
    grid = make_grid(L, N)
    if not np.allclose(grid.x, xs, rtol=0, atol=1e-12 * max(1.0, L)):
        raise StateFileError(f"{path}: x column does not match the declared uniform grid")
    U = StatePair.from_arrays(grid, np.array(es), np.array(us))

    warnings_list: list[str] = []
    pmeta = meta.get("params")
    omega = meta.get("omega")
    if pmeta and omega is not None:
        from .solver import residual
        params = ModelParams(a=pmeta["a"], b=pmeta["b"], c=pmeta["c"], p=pmeta.get("p", 1.0))
        try:
            _, _, rn = residual(U, params, omega)
        except Exception as exc:  # outside the admissible regime, etc.
            warnings_list.append(f"could not recompute residual: {exc}")
        else:
            recorded = meta.get("residual_norm")
            if recorded is not None and abs(rn - recorded) > max(1e-8, 10.0 * abs(recorded)):
                warnings_list.append(
                    f"recorded residual {recorded:.3e} inconsistent with recomputed {rn:.3e}; "
                    "omega/params may not match the payload")
    return U, meta, warnings_list


def write_branch(path, branch: Branch, extra: dict | None = None) -> Path:
    path = Path(path)
    table = branch.table()
    n = len(branch)
    with path.open("w") as fh:
        fh.write(",".join(BRANCH_COLUMNS) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(table[c][i]) for c in BRANCH_COLUMNS) + "\n")
    p = branch.params
    meta = {
        "format": "wavelab-branch",
        "version": 1,
        "params": {"a": p.a, "b": p.b, "c": p.c, "p": p.p},
        "failed_omegas": list(branch.failed_omegas),
    }
    if extra:
        meta.update(extra)
    _meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_branch(path) -> Branch:
    path = Path(path)
    meta_file = _meta_path(path)
    if not meta_file.exists():
        raise StateFileError(f"missing sidecar {meta_file}")
    meta = json.loads(meta_file.read_text())
    if meta.get("format") != "wavelab-branch":
        raise StateFileError(f"{meta_file}: not a branch sidecar")
    pm = meta["params"]
    params = ModelParams(a=pm["a"], b=pm["b"], c=pm["c"], p=pm.get("p", 1.0))

    with path.open() as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != BRANCH_COLUMNS:
            raise StateFileError(f"{path}: unexpected columns {header}")
        rows = []
        for row_idx, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(BRANCH_COLUMNS):
                raise StateFileError(f"{path}: row {row_idx}: expected "
                                     f"{len(BRANCH_COLUMNS)} columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise StateFileError(f"{path}: row {row_idx}: {exc}") from exc
    if not rows:
        raise StateFileError(f"{path}: empty branch")
    data = {c: np.array([r[j] for r in rows]) for j, c in enumerate(BRANCH_COLUMNS)}
    order = np.argsort(-data["omega"])
    return Branch(
        params=params,
        omega=data["omega"][order], eps=data["eps"][order], iw_min=data["Iw_min"][order],
        i2w=data["I2w"][order], g=data["G"][order], h=data["H"][order], q=data["Q"][order],
        d=data["d"][order], residual=data["residual"][order],
        points=None, failed_omegas=tuple(meta.get("failed_omegas", [])),
    )


def write_trace(path, trace: EvolutionTrace) -> Path:
    path = Path(path)
    has_dist = trace.orbit_distance is not None
    with path.open("w") as fh:
        fh.write("t,H,Q,x_norm,orbit_distance\n")
        for i in range(len(trace.times)):
            dist = trace.orbit_distance[i] if has_dist else math.nan
            fh.write(",".join(_fmt(v) for v in
                              (trace.times[i], trace.H[i], trace.Q[i], trace.x_norm[i], dist)) + "\n")
    return path


def write_report(path, report: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def write_dat(path, columns: dict) -> Path:
    """Gnuplot-ready whitespace table with a '#' header line."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    n = len(arrays[0])
    with path.open("w") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for i in range(n):
            fh.write(" ".join(_fmt(a[i]) for a in arrays) + "\n")
    return path
