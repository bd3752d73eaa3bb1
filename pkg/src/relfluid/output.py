"""Run artifacts: diagnostics CSV, field snapshots, and manifests.

Formats are bit-specified so results are comparable across machines and
directly parseable from any language:

* ``diagnostics.csv`` — fixed header
  ``t,H,M,K,E,div_residual,K_source,E_source,max_v_over_c``; one row per
  accepted step; floats in ``repr`` form (shortest round-trip);
  quantities that do not exist for the mode are empty fields, never
  zeros.  Rows are flushed as written so a crashed run leaves a usable
  partial record.
* snapshots — one file per field per sample: a single ASCII header line
  ``# relfluid v1 <field> nx=<> ny=<> [nz=<>] lx=<> ly=<> [lz=<>] t=<>``
  followed by the raw little-endian float64 array in row-major order.
* ``manifest.json`` — code version plus the grid/operator choices that
  determine the numbers; ``error_manifest.json`` — appears only when a
  run aborts, recording the failure class, message, and progress.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from typing import IO

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .diagnostics import DiagnosticsRecord
from .errors import ParseError

CSV_HEADER = "t,H,M,K,E,div_residual,K_source,E_source,max_v_over_c"

_CSV_FIELDS = CSV_HEADER.split(",")


def format_float(value: float | None) -> str:
    """Shortest round-trip decimal form; None becomes the empty field."""
    if value is None:
        return ""
    return repr(float(value))


class DiagnosticsWriter:
    """Appends DiagnosticsRecord rows to a CSV file, flushing each one."""

    def __init__(self, path: str):
        self.path = path
        self._fh: IO[str] = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(CSV_HEADER + "\n")
        self._fh.flush()

    def append(self, record: DiagnosticsRecord) -> None:
        row = ",".join(
            format_float(getattr(record, name)) for name in _CSV_FIELDS
        )
        self._fh.write(row + "\n")
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> "DiagnosticsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_diagnostics(path: str) -> dict[str, np.ndarray]:
    """Read a diagnostics CSV back into column arrays (NaN for empties)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ParseError(
                f"{path}: unexpected diagnostics header {header!r}"
            )
        rows = [line.strip().split(",") for line in fh if line.strip()]
    columns: dict[str, np.ndarray] = {}
    for i, name in enumerate(_CSV_FIELDS):
        columns[name] = np.array(
            [float(r[i]) if r[i] else np.nan for r in rows]
        )
    return columns


def snapshot_header(field: str, grid, t: float) -> str:
    dims = ["nx", "ny", "nz"]
    lens = ["lx", "ly", "lz"]
    parts = [f"# relfluid v1 {field}"]
    for name, n in zip(dims, grid.shape):
        parts.append(f"{name}={n}")
    for name, length in zip(lens, grid.lengths):
        parts.append(f"{name}={format_float(length)}")
    parts.append(f"t={format_float(t)}")
    return " ".join(parts)


def write_snapshot(path: str, field: str, grid, data: np.ndarray, t: float) -> None:
    """One field, one time: ASCII header line + raw little-endian doubles."""
    if tuple(data.shape) != tuple(grid.shape):
        raise ValueError(
            f"snapshot field {field!r} has shape {data.shape}, grid is {grid.shape}"
        )
    payload = np.ascontiguousarray(data, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write((snapshot_header(field, grid, t) + "\n").encode("ascii"))
        fh.write(payload.tobytes())


@dataclasses.dataclass(frozen=True)
class Snapshot:
    field: str
    dims: tuple[int, ...]
    lengths: tuple[float, ...]
    t: float
    data: np.ndarray


def read_snapshot(path: str) -> Snapshot:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").rstrip("\n")
        blob = fh.read()
    tokens = header.split()
    if tokens[:3] != ["#", "relfluid", "v1"] or len(tokens) < 4:
        raise ParseError(f"{path}: not a relfluid v1 snapshot (header {header!r})")
    field = tokens[3]
    kv = {}
    for token in tokens[4:]:
        key, _, value = token.partition("=")
        kv[key] = value
    dims = tuple(int(kv[name]) for name in ("nx", "ny", "nz") if name in kv)
    lengths = tuple(float(kv[name]) for name in ("lx", "ly", "lz") if name in kv)
    t = float(kv["t"])
    data = np.frombuffer(blob, dtype="<f8").reshape(dims)
    return Snapshot(field=field, dims=dims, lengths=lengths, t=t, data=data)


def write_manifest(path: str, config, grid, extra: dict | None = None) -> None:
    """Record code version and the choices that determine the numbers."""
    manifest = {
        "package": "relfluid",
        "version": __version__,
        "kernel_backend": BACKEND,
        "mode": config.mode,
        "grid": {
            "dims": list(grid.shape),
            "lengths": list(grid.lengths),
            "derivatives": grid.deriv_family,
        },
        "operators": {
            "scheme": config.scheme,
            "projection": config.projection,
            "tol": config.tol,
            "max_iter": config.max_iter,
            "cfl": config.cfl,
            "dt": config.dt,
        },
        "seed": config.seed,
        "initial_condition": config.initial_condition,
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_error_manifest(
    path: str, exc: BaseException, t: float, steps: int
) -> None:
    doc = {
        "error": type(exc).__name__,
        "message": str(exc),
        # null marks "before any step was taken" (strict JSON has no NaN)
        "t_reached": t if math.isfinite(t) else None,
        "steps_completed": steps,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
