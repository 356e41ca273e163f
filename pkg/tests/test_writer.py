import json

import numpy as np
import pytest

from allspeed.exceptions import ConfigError
from allspeed.output.config import OutputConfig
from allspeed.output.schema import RunRecord, RunStatus
from allspeed.output.writer import read_csv, write_csv, write_error_report, write_snapshot, write_summary, write_vtk
from allspeed.solver.diagnostics import ErrorReport
from allspeed.solver.mesh import BoundaryCondition, BoundaryKind, build_grid, grid_config_from_mapping
from allspeed.solver.state import PrimitiveState


def line_grid(n: int = 3):
    boundaries = {side: BoundaryCondition(BoundaryKind.NEUMANN) for side in ("xmin", "xmax")}
    return build_grid(grid_config_from_mapping([n], [0.0], [1.0], boundaries))


def square_grid(n: int = 4, mask=()):
    boundaries = {side: BoundaryCondition(BoundaryKind.SLIP_WALL) for side in ("xmin", "xmax", "ymin", "ymax")}
    return build_grid(grid_config_from_mapping([n, n], [0.0, 0.0], [1.0, 1.0], boundaries, mask))


def primitive(shape, dimension):
    p = np.arange(1.0, 1.0 + np.prod(shape)).reshape(shape)
    return PrimitiveState(p=p, h=3.5 * np.ones(shape), u=np.stack([0.1 * p] * dimension), rho=p.copy())


def test_csv_has_header_and_one_row_per_cell(tmp_path) -> None:
    grid = line_grid()
    prim = primitive((3,), 1)
    path = write_csv(grid, prim, tmp_path / "out" / "sod.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "x,rho,u,p,h"
    assert len(lines) == 4
    table = read_csv(path)
    np.testing.assert_allclose(table["x"], grid.centers(0))
    np.testing.assert_array_equal(table["p"], prim.p)


def test_csv_keeps_full_precision(tmp_path) -> None:
    grid = line_grid()
    prim = primitive((3,), 1)
    prim.p[0] = 1.0 / 3.0
    table = read_csv(write_csv(grid, prim, tmp_path / "p.csv"))
    assert table["p"][0] == 1.0 / 3.0


def test_vtk_structured_points(tmp_path) -> None:
    grid = square_grid()
    prim = primitive((4, 4), 2)
    lines = write_vtk(grid, prim, tmp_path / "cavity.vtk").read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert "DIMENSIONS 4 4 1" in lines
    assert "POINT_DATA 16" in lines
    start = lines.index("SCALARS p double 1") + 2
    # x runs fastest
    assert float(lines[start + 1]) == prim.p[1, 0]
    velocity = lines.index("VECTORS velocity double")
    assert len(lines) - velocity - 1 == 16


def test_vtk_marks_solid_cells(tmp_path) -> None:
    grid = square_grid(8, [((0.0, 0.0), (0.5, 0.5))])
    prim = primitive((8, 8), 2)
    text = write_vtk(grid, prim, tmp_path / "step.vtk").read_text()
    assert "SCALARS solid int 1" in text


def test_vtk_needs_two_dimensions(tmp_path) -> None:
    with pytest.raises(ConfigError):
        write_vtk(line_grid(), primitive((3,), 1), tmp_path / "line.vtk")
    with pytest.raises(ConfigError):
        write_snapshot(line_grid(), primitive((3,), 1), "hdf5", tmp_path / "line.h5")


def test_summary_file_holds_the_record(tmp_path) -> None:
    record = RunRecord(case="sod", scheme="ap", epsilon=1.0, alpha=0.0, order=2)
    record.dt_history = [1e-3, 1e-3]
    record.update_status(RunStatus.COMPLETED)
    assert record.finished_at is not None
    path = write_summary(record, tmp_path / "summary.json")
    data = json.loads(path.read_text())
    assert data["status"] == "completed"
    assert data["dt_history"] == record.dt_history
    assert data["finished_at"] == record.finished_at.isoformat()


def test_failed_record_keeps_the_error() -> None:
    record = RunRecord(case="sod", scheme="ap", epsilon=1.0, alpha=0.0, order=2)
    record.update_status(RunStatus.FAILED, {"error": "PositivityError"})
    assert record.snapshot()["error"] == {"error": "PositivityError"}


def test_error_report_file(tmp_path) -> None:
    report = ErrorReport(case="sod", field="p", reference="exact")
    report.add(100, 0.01, 1e-3, 4e-2)
    report.add(200, 0.005, 1e-3, 2e-2)
    lines = write_error_report(report, tmp_path / "errors.csv").read_text().splitlines()
    assert lines[0] == "cells,dx,dt,l1_error,order"
    assert lines[1].endswith(",")
    assert float(lines[2].split(",")[-1]) == pytest.approx(1.0)


def test_output_config_from_env(monkeypatch, tmp_path) -> None:
    monkeypatch.setenv("ALLSPEED_OUTPUT_DIR", str(tmp_path))
    monkeypatch.setenv("ALLSPEED_FORMATS", "csv, vtk")
    config = OutputConfig.from_env()
    assert config.formats == ["csv", "vtk"]
    assert config.run_directory("sod") == tmp_path / "sod"
    monkeypatch.setenv("ALLSPEED_FORMATS", "csv,png")
    with pytest.raises(ConfigError):
        OutputConfig.from_env()
