"""Delimited-text and JSON formats for every exported artifact, with parsers.

Time series are comma-separated with ``#`` header lines carrying metadata as
``# key=value`` (values JSON-encoded).  Numbers are written with 17
significant digits so every file round-trips exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .discord import DiscordCurve
from .dynamics import MeanTrajectory
from .moments import CovarianceTrajectory
from .witnesses import Spectrum, SyncMatrix, WindowSpec

__all__ = [
    "write_json",
    "read_json",
    "write_means",
    "read_means",
    "write_covariance",
    "read_covariance",
    "write_sync_matrix",
    "read_sync_matrix",
    "write_spectrum",
    "read_spectrum",
    "write_discord",
    "read_discord",
    "write_table",
    "read_table",
]

FLOAT_FMT = "%.17g"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_table(path, columns: Iterable[str], rows: np.ndarray, meta: Optional[dict] = None) -> Path:
    """Write a float table with ``# key=value`` metadata lines and a column header."""
    path = Path(path)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    columns = list(columns)
    if rows.size and rows.shape[1] != len(columns):
        raise ValueError(f"{len(columns)} column names for {rows.shape[1]} columns")
    lines = [f"# {k}={json.dumps(_jsonable(v), sort_keys=True)}" for k, v in (meta or {}).items()]
    lines.append(",".join(columns))
    body = "\n".join(",".join(FLOAT_FMT % x for x in row) for row in rows) if rows.size else ""
    path.write_text("\n".join(lines) + "\n" + (body + "\n" if body else ""))
    return path


def read_table(path) -> tuple[list[str], np.ndarray, dict]:
    meta, columns, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = json.loads(value)
        elif columns is None:
            columns = line.split(",")
        else:
            rows.append([float(x) for x in line.split(",")])
    if columns is None:
        raise ValueError(f"{path}: missing column header")
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return columns, data, meta


def _window_meta(window: WindowSpec) -> dict:
    return {
        "t_start": window.t_start,
        "delta_t": window.delta_t,
        "stride": window.stride,
        "shift_search": window.shift_search,
    }


def _window_from_meta(meta: dict) -> WindowSpec:
    return WindowSpec(meta["t_start"], meta["delta_t"], meta["stride"], meta["shift_search"])


# means: t, Re a_1, Im a_1, ...


def write_means(path, traj: MeanTrajectory, meta: Optional[dict] = None) -> Path:
    n = traj.amplitudes.shape[1]
    cols = ["t"] + [f"{p}_a{k}" for k in range(n) for p in ("re", "im")]
    data = np.empty((traj.times.size, 1 + 2 * n))
    data[:, 0] = traj.times
    data[:, 1::2] = traj.amplitudes.real
    data[:, 2::2] = traj.amplitudes.imag
    return write_table(path, cols, data, {"method": traj.method, **(meta or {})})


def read_means(path) -> MeanTrajectory:
    _, data, meta = read_table(path)
    amps = data[:, 1::2] + 1j * data[:, 2::2]
    return MeanTrajectory(data[:, 0], amps, meta.get("method", "file"))


# covariance: per time, lower triangle (row-major) with re/im interleaved


def write_covariance(path, traj: CovarianceTrajectory, metadata: dict) -> tuple[Path, Path]:
    path = Path(path)
    dim = traj.c.shape[1]
    rows, cols = np.tril_indices(dim)
    names = ["t"] + [f"{p}_c{r}_{c}" for r, c in zip(rows, cols) for p in ("re", "im")]
    tri = traj.c[:, rows, cols]
    data = np.empty((traj.times.size, 1 + 2 * rows.size))
    data[:, 0] = traj.times
    data[:, 1::2] = tri.real
    data[:, 2::2] = tri.imag
    write_table(path, names, data, {"dim": dim})
    sidecar = path.with_suffix(".meta.json")
    write_json(sidecar, {**metadata, "dim": dim, "growing": bool(traj.growing)})
    return path, sidecar


def read_covariance(path) -> CovarianceTrajectory:
    _, data, meta = read_table(path)
    dim = int(meta["dim"])
    rows, cols = np.tril_indices(dim)
    c = np.zeros((data.shape[0], dim, dim), dtype=complex)
    vals = data[:, 1::2] + 1j * data[:, 2::2]
    c[:, rows, cols] = vals
    c[:, cols, rows] = vals
    sidecar = Path(path).with_suffix(".meta.json")
    growing = bool(read_json(sidecar).get("growing", False)) if sidecar.exists() else False
    return CovarianceTrajectory(data[:, 0], c, growing)


# sync matrix: n x n values, window in the header


def write_sync_matrix(path, sync: SyncMatrix) -> Path:
    n = sync.values.shape[0]
    meta = {**_window_meta(sync.window), "kind": sync.kind, "shifted": sync.shifts is not None}
    data = sync.values if sync.shifts is None else np.vstack([sync.values, sync.shifts])
    return write_table(path, [f"n{k}" for k in range(n)], data, meta)


def read_sync_matrix(path) -> SyncMatrix:
    cols, data, meta = read_table(path)
    n = len(cols)
    shifts = data[n:] if meta.get("shifted") else None
    return SyncMatrix(data[:n], _window_from_meta(meta), shifts, meta.get("kind", "Re<a>"))


# spectrum: frequency, |f|, Re f, Im f


def write_spectrum(path, spectrum: Spectrum, meta: Optional[dict] = None) -> Path:
    amps = spectrum.amplitudes
    data = np.column_stack([spectrum.frequencies, np.abs(amps), amps.real, amps.imag])
    return write_table(path, ["frequency", "magnitude", "re", "im"], data, {**_window_meta(spectrum.window), **(meta or {})})


def read_spectrum(path) -> Spectrum:
    _, data, meta = read_table(path)
    return Spectrum(data[:, 0], data[:, 2] + 1j * data[:, 3], _window_from_meta(meta))


# discord: t, D(i->j), D(j->i)


def write_discord(path, curve: DiscordCurve) -> Path:
    i, j = curve.i, curve.j
    data = np.column_stack([curve.times, curve.forward, curve.backward])
    return write_table(path, ["t", f"D({i}->{j})", f"D({j}->{i})"], data, {"i": i, "j": j, "forward": f"measure node {i}"})


def read_discord(path) -> DiscordCurve:
    _, data, meta = read_table(path)
    return DiscordCurve(data[:, 0], data[:, 1], data[:, 2], int(meta["i"]), int(meta["j"]))
