"""Run orchestration: single runs, convergence studies and scheme comparisons."""
from __future__ import annotations

import logging
import time as wallclock
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..config.cases import CaseDefinition, apply_overrides, dump_case, exact_reference, load_case, recirculation_region
from ..exceptions import AllSpeedError, ConfigError
from ..models.manifest import ConvergenceRequest, RunManifest, RunOverrides
from ..output.config import OutputConfig
from ..output.schema import RunRecord, RunStatus
from ..output.writer import write_error_report, write_snapshot, write_summary
from ..solver.diagnostics import ErrorReport, detect_recirculation, l1_error, local_mach, max_divergence
from .callbacks import CallbackManager
from .workflow import Simulation

logger = logging.getLogger(__name__)

EXACT_OVERSAMPLING = 16


def prepare_case(reference: str, overrides: Optional[RunOverrides] = None) -> CaseDefinition:
    case = load_case(reference)
    return apply_overrides(case, overrides.as_updates() if overrides else {})


def _format_time(t: float) -> str:
    return f"{t:.6f}".rstrip("0").rstrip(".")


def summarize(sim: Simulation, record: RunRecord) -> RunRecord:
    """Fill the final diagnostics of a run into its record."""

    prim = sim.prim
    fluid = ~sim.grid.solid
    record.time = sim.time
    record.steps = sim.steps
    record.dt_history = list(sim.dt_history)
    record.newton_iterations = list(sim.newton_iterations)
    record.mass_drift = sim.ledger.mass_drift
    record.energy_drift = sim.ledger.energy_drift
    record.max_divergence = max_divergence(sim.grid, prim.u, sim.time)
    record.extrema = {
        name: [float(values[fluid].min()), float(values[fluid].max())]
        for name, values in (("rho", prim.rho), ("p", prim.p), ("h", prim.h))
    }
    record.max_local_mach = float(local_mach(prim, sim.eos, sim.config.epsilon)[fluid].max())
    if sim.grid.dimension == 2:
        found = detect_recirculation(
            sim.grid,
            prim.u,
            recirculation_region(sim.case),
            sim.case.monitor.recirculation_threshold,
        )
        record.recirculation = {
            "found": found.found,
            "center": list(found.center) if found.center else None,
            "vorticity": found.vorticity,
        }
    return record


def run(manifest: RunManifest, output: Optional[OutputConfig] = None) -> RunRecord:
    """Execute one manifest; snapshots and ``summary.json`` go to the run directory."""

    output = output or OutputConfig.from_env()
    case = prepare_case(manifest.case, manifest.overrides)
    directory = manifest.output_dir or output.run_directory(case.name)
    formats = manifest.formats or case.output.formats or output.formats
    if case.dimension == 1:
        formats = [f for f in formats if f != "vtk"] or ["csv"]
    snapshots = case.output.snapshots if manifest.snapshots is None else manifest.snapshots
    every = manifest.every or case.output.every

    callbacks = CallbackManager()
    record = RunRecord(
        case=case.name,
        scheme=manifest.scheme,
        epsilon=float(case.epsilon),
        alpha=case.solver.alpha,
        order=case.solver.order,
    )

    def write(sim: Simulation, label: str) -> None:
        for fmt in formats:
            path = directory / f"{case.name}_{label}.{fmt}"
            write_snapshot(sim.grid, sim.prim, fmt, path)
            record.snapshots.append(str(path))

    callbacks.register("snapshot", lambda sim: write(sim, f"t{_format_time(sim.time)}"))
    callbacks.register("step", lambda event: logger.debug(f"step {event.step} t={event.time:.6g} dt={event.dt:.4e}"))

    started = wallclock.perf_counter()
    record.update_status(RunStatus.RUNNING)
    logger.info(f"Running '{case.name}' ({manifest.scheme}) to t={case.time.end_time:g} into {directory}")
    sim: Optional[Simulation] = None
    try:
        sim = Simulation(case, scheme=manifest.scheme, callbacks=callbacks)
        sim.advance(case.time.end_time, snapshot_times=snapshots, every=every, dump_path=manifest.dump_system)
        write(sim, "final")
        summarize(sim, record)
        record.update_status(RunStatus.COMPLETED)
    except AllSpeedError as exc:
        logger.error(f"Run '{case.name}' failed: {exc}")
        if sim is not None:
            record.time, record.steps = sim.time, sim.steps
            record.dt_history = list(sim.dt_history)
            record.newton_iterations = list(sim.newton_iterations)
        record.update_status(RunStatus.FAILED, {"error": type(exc).__name__, "message": str(exc), "details": exc.details})
        raise
    finally:
        record.wall_clock = wallclock.perf_counter() - started
        write_summary(record, directory / "summary.json")
    return record


# --------------------------------------------------------------------------------------
# Convergence studies
# --------------------------------------------------------------------------------------


@dataclass
class _Profile:
    cells: int
    dx: float
    dt: float
    x: np.ndarray
    values: np.ndarray


def _field(sim: Simulation, name: str) -> np.ndarray:
    if name == "u":
        return sim.prim.u[0].copy()
    return getattr(sim.prim, name).copy()


def _resolution_case(base: CaseDefinition, cells: int, request: ConvergenceRequest) -> CaseDefinition:
    case = apply_overrides(base, {"cells": cells})
    dx = (case.grid.upper[0] - case.grid.lower[0]) / cells
    if request.dt_factor is not None:
        case = apply_overrides(case, {"dt": request.dt_factor * dx**request.dt_power})
    return case


def _profile(case: CaseDefinition, field: str) -> _Profile:
    sim = Simulation(case)
    sim.advance(case.time.end_time)
    logger.info(f"  {case.grid.cells[0]} cells: {sim.steps} steps")
    return _Profile(
        cells=case.grid.cells[0],
        dx=sim.grid.dx,
        dt=sim.dt_history[0] if sim.dt_history else 0.0,
        x=sim.grid.centers(0),
        values=_field(sim, field),
    )


def convergence_study(request: ConvergenceRequest, output_path: Optional[Path] = None) -> ErrorReport:
    """L1 errors of one field against the exact solution or a fine reference run."""

    base = prepare_case(request.case, request.overrides)
    if base.dimension != 1:
        raise ConfigError("convergence studies are one-dimensional", details={"case": base.name})
    period = None
    if base.boundaries["xmin"].kind == "periodic":
        period = base.grid.upper[0] - base.grid.lower[0]

    cases = [_resolution_case(base, n, request) for n in request.resolutions]
    if request.reference != "exact":
        cases.append(_resolution_case(base, int(request.reference), request))
    logger.info(f"Convergence study of '{base.name}' at {request.resolutions} against {request.reference}")
    with ThreadPoolExecutor(max_workers=request.threads) as pool:
        profiles = list(pool.map(lambda c: _profile(c, request.field), cases))

    if request.reference == "exact":
        samples = EXACT_OVERSAMPLING * max(request.resolutions)
        lo, hi = base.grid.lower[0], base.grid.upper[0]
        ref_x = lo + (np.arange(samples) + 0.5) * (hi - lo) / samples
        exact = exact_reference(base, ref_x, base.time.end_time)
        if exact is None:
            raise ConfigError(f"case '{base.name}' has no exact solution; pass a reference resolution")
        ref_values = exact[request.field]
        label = "exact"
    else:
        reference = profiles.pop()
        ref_x, ref_values = reference.x, reference.values
        label = f"{reference.cells} cells"

    report = ErrorReport(case=base.name, field=request.field, reference=label)
    for prof in profiles:
        report.add(prof.cells, prof.dx, prof.dt, l1_error(prof.x, prof.values, ref_x, ref_values, period=period))
    if output_path is not None:
        write_error_report(report, output_path)
    return report


# --------------------------------------------------------------------------------------
# AP versus explicit
# --------------------------------------------------------------------------------------


def _timed_run(case: CaseDefinition, scheme: str) -> Tuple[Simulation, float]:
    started = wallclock.perf_counter()
    sim = Simulation(case, scheme=scheme)
    sim.advance(case.time.end_time)
    return sim, wallclock.perf_counter() - started


def compare_explicit(reference: str, overrides: Optional[RunOverrides] = None, threads: int = 1) -> Dict[str, Any]:
    """Run both schemes to the same time and report step counts and their pressure distance.

    With ``threads > 1`` the two schemes advance concurrently.
    """

    if threads < 1:
        raise ConfigError("threads must be at least 1", details={"threads": threads})
    case = prepare_case(reference, overrides)
    results: Dict[str, Any] = {"case": case.name, "end_time": case.time.end_time, "epsilon": case.epsilon}
    schemes = ("ap", "explicit")
    with ThreadPoolExecutor(max_workers=min(threads, len(schemes))) as pool:
        finished = list(pool.map(lambda scheme: _timed_run(case, scheme), schemes))
    sims: Dict[str, Simulation] = {}
    for scheme, (sim, elapsed) in zip(schemes, finished):
        sims[scheme] = sim
        results[scheme] = {
            "steps": sim.steps,
            "mean_dt": float(np.mean(sim.dt_history)) if sim.dt_history else 0.0,
            "wall_clock": elapsed,
        }
    fluid = ~sims["ap"].grid.solid
    p_ap, p_ex = sims["ap"].prim.p[fluid], sims["explicit"].prim.p[fluid]
    results["pressure_l1_distance"] = float(np.sum(np.abs(p_ap - p_ex)) / np.sum(np.abs(p_ex)))
    logger.info(
        f"AP: {results['ap']['steps']} steps, explicit: {results['explicit']['steps']} steps, "
        f"relative L1 pressure distance {results['pressure_l1_distance']:.3e}"
    )
    return results


def export_case(name: str, path: Path) -> Path:
    return dump_case(load_case(name, scaled=False), path)


__all__ = [
    "compare_explicit",
    "convergence_study",
    "export_case",
    "prepare_case",
    "run",
    "summarize",
]
