"""Snapshot, summary and error-report files."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, List

import numpy as np

from ..exceptions import ConfigError
from ..solver.diagnostics import ErrorReport
from ..solver.mesh import StructuredGrid
from ..solver.state import PrimitiveState
from .schema import RunRecord

logger = logging.getLogger(__name__)

NUMBER_FORMAT = "%.17g"


def _columns(grid: StructuredGrid, prim: PrimitiveState) -> Dict[str, np.ndarray]:
    coords = grid.coordinates()
    names = ("x", "y")[: grid.dimension]
    velocity = ("u", "v")[: grid.dimension]
    columns: Dict[str, np.ndarray] = {name: c.ravel() for name, c in zip(names, coords)}
    columns["rho"] = prim.rho.ravel()
    for name, component in zip(velocity, prim.u):
        columns[name] = component.ravel()
    columns["p"] = prim.p.ravel()
    columns["h"] = prim.h.ravel()
    return columns


def write_csv(grid: StructuredGrid, prim: PrimitiveState, path: Path) -> Path:
    """One row per cell in C order: coordinates, rho, velocity, p, h."""

    columns = _columns(grid, prim)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack(list(columns.values()))
    np.savetxt(path, table, fmt=NUMBER_FORMAT, delimiter=",", header=",".join(columns), comments="")
    return path


def read_csv(path: Path) -> Dict[str, np.ndarray]:
    path = Path(path)
    with path.open() as handle:
        header = handle.readline().strip().split(",")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: table[:, k] for k, name in enumerate(header)}


def write_vtk(grid: StructuredGrid, prim: PrimitiveState, path: Path, title: str = "allspeed snapshot") -> Path:
    """Legacy ASCII VTK structured points with one point per cell center."""

    if grid.dimension != 2:
        raise ConfigError("VTK snapshots are written for 2D grids only")
    nx, ny = grid.cells
    n = nx * ny
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def fortran(values: np.ndarray) -> np.ndarray:
        # VTK runs x fastest
        return values.ravel(order="F")

    lines: List[str] = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} 1",
        f"ORIGIN {grid.origin[0] + 0.5 * grid.dx:.17g} {grid.origin[1] + 0.5 * grid.dx:.17g} 0",
        f"SPACING {grid.dx:.17g} {grid.dx:.17g} {grid.dx:.17g}",
        f"POINT_DATA {n}",
    ]
    for name, values in (("rho", prim.rho), ("p", prim.p), ("h", prim.h)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(NUMBER_FORMAT % v for v in fortran(values))
    if grid.mask is not None:
        lines.append("SCALARS solid int 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(str(int(v)) for v in fortran(grid.mask))
    lines.append("VECTORS velocity double")
    for ux, uy in zip(fortran(prim.u[0]), fortran(prim.u[1])):
        lines.append(f"{NUMBER_FORMAT % ux} {NUMBER_FORMAT % uy} 0")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_snapshot(grid: StructuredGrid, prim: PrimitiveState, fmt: str, path: Path) -> Path:
    if fmt == "csv":
        written = write_csv(grid, prim, path)
    elif fmt == "vtk":
        written = write_vtk(grid, prim, path)
    else:
        raise ConfigError(f"unknown snapshot format '{fmt}'", details={"choices": ["csv", "vtk"]})
    logger.info(f"Wrote {fmt} snapshot {written}")
    return written


def write_summary(record: RunRecord, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record.snapshot(), indent=2, sort_keys=True))
    return path


def write_error_report(report: ErrorReport, path: Path) -> Path:
    """CSV rows: resolution, dx, dt, L1 error, estimated order."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["cells,dx,dt,l1_error,order"]
    for row in report.rows:
        order = "" if row.order is None else NUMBER_FORMAT % row.order
        lines.append(f"{row.cells},{NUMBER_FORMAT % row.dx},{NUMBER_FORMAT % row.dt},{NUMBER_FORMAT % row.error},{order}")
    path.write_text("\n".join(lines) + "\n")
    logger.info(f"Wrote error report {path}")
    return path
