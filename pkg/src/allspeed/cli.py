"""Command-line driver: ``run``, ``converge``, ``compare-explicit`` and ``export-case``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .config.cases import list_cases
from .exceptions import EXIT_OK, ConfigError, exit_code_for, format_error
from .models.manifest import ConvergenceRequest, RunManifest, RunOverrides, load_manifest, validate_model
from .output.config import OutputConfig
from .services import run_manager

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _reference(text: str) -> Any:
    return text if text == "exact" else int(text)


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("case overrides")
    group.add_argument("--cells", type=int, help="cells along the first axis")
    group.add_argument("--dt", type=float, help="fixed time step")
    group.add_argument("--cfl", type=float)
    group.add_argument("--alpha", type=float)
    group.add_argument("--epsilon", type=float, help="reference Mach number")
    group.add_argument("--order", type=int, choices=(1, 2))
    group.add_argument("--end-time", dest="end_time", type=float)
    group.add_argument("--newton-tol", dest="newton_tol", type=float)
    group.add_argument("--linear-solver", dest="linear_solver", choices=("direct", "bicgstab", "gmres", "dense"))
    group.add_argument("--pressure-path", dest="pressure_path", choices=("auto", "linear", "newton"))


def _add_logging(parser: argparse.ArgumentParser) -> None:
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log per-step detail")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="allspeed", description="All-speed asymptotic-preserving flow solver")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one case to its end time")
    run.add_argument("--case", help="built-in case name or case file")
    run.add_argument("--manifest", type=Path, help="YAML run manifest; flags win over its entries")
    run.add_argument("--scheme", choices=("ap", "explicit"))
    run.add_argument("--output-dir", dest="output_dir", type=Path)
    run.add_argument("--formats", type=lambda s: [f for f in s.split(",") if f])
    run.add_argument("--snapshots", type=_floats, help="comma-separated snapshot times")
    run.add_argument("--every", type=int, help="snapshot every N steps")
    run.add_argument("--dump-system", dest="dump_system", type=Path, help="write the first pressure system as triplets")
    _add_overrides(run)
    _add_logging(run)

    converge = sub.add_parser("converge", help="L1 convergence study of a 1D case")
    converge.add_argument("--case", required=True)
    converge.add_argument("--resolutions", type=_ints, required=True, help="e.g. 100,200,400")
    converge.add_argument("--reference", type=_reference, default="exact", help="'exact' or a cell count")
    converge.add_argument("--dt-factor", dest="dt_factor", type=float)
    converge.add_argument("--dt-power", dest="dt_power", type=float, default=2.0)
    converge.add_argument("--field", choices=("p", "rho", "u", "h"), default="p")
    converge.add_argument("--threads", type=int, default=1)
    converge.add_argument("--csv", type=Path, help="write the error table here")
    _add_overrides(converge)
    _add_logging(converge)

    compare = sub.add_parser("compare-explicit", help="AP against the explicit scheme on one case")
    compare.add_argument("--case", required=True)
    compare.add_argument("--threads", type=int, default=1, help="advance the two schemes concurrently")
    _add_overrides(compare)
    _add_logging(compare)

    export = sub.add_parser("export-case", help="write a built-in case as a YAML file")
    export.add_argument("name", choices=list_cases())
    export.add_argument("path", type=Path)
    _add_logging(export)
    return parser


def configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format=LOG_FORMAT, force=True)


def _override_flags(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, key) for key in RunOverrides.model_fields}


def _run(args: argparse.Namespace) -> int:
    flags: Dict[str, Any] = {
        "case": args.case,
        "scheme": args.scheme,
        "output_dir": args.output_dir,
        "formats": args.formats,
        "snapshots": args.snapshots,
        "every": args.every,
        "dump_system": args.dump_system,
        **_override_flags(args),
    }
    if args.manifest is not None:
        manifest = load_manifest(args.manifest).with_flags(**flags)
    elif args.case is None:
        raise ConfigError("run needs --case or --manifest")
    else:
        overrides = {k: v for k, v in _override_flags(args).items() if v is not None}
        top = {k: v for k, v in flags.items() if v is not None and k not in overrides}
        manifest = validate_model(RunManifest, {**top, "overrides": overrides})
    record = run_manager.run(manifest, OutputConfig.from_env())
    logger.info(f"Run finished after {record.steps} steps in {record.wall_clock:.2f}s")
    return EXIT_OK


def _converge(args: argparse.Namespace) -> int:
    overrides = {k: v for k, v in _override_flags(args).items() if v is not None}
    request = validate_model(
        ConvergenceRequest,
        {
            "case": args.case,
            "resolutions": args.resolutions,
            "reference": args.reference,
            "dt_factor": args.dt_factor,
            "dt_power": args.dt_power,
            "field": args.field,
            "threads": args.threads,
            "overrides": overrides,
        },
    )
    report = run_manager.convergence_study(request, args.csv)
    print(f"# {report.case}: L1 error of {report.field} against {report.reference}")
    print(f"{'cells':>8} {'dx':>12} {'dt':>12} {'L1 error':>12} {'order':>7}")
    for row in report.rows:
        order = "" if row.order is None else f"{row.order:.2f}"
        print(f"{row.cells:>8d} {row.dx:>12.4e} {row.dt:>12.4e} {row.error:>12.4e} {order:>7}")
    return EXIT_OK


def _compare(args: argparse.Namespace) -> int:
    overrides = validate_model(RunOverrides, {k: v for k, v in _override_flags(args).items() if v is not None})
    result = run_manager.compare_explicit(args.case, overrides, threads=args.threads)
    print(json.dumps(result, indent=2, default=str))
    return EXIT_OK


def _export(args: argparse.Namespace) -> int:
    run_manager.export_case(args.name, args.path)
    return EXIT_OK


COMMANDS = {
    "run": _run,
    "converge": _converge,
    "compare-explicit": _compare,
    "export-case": _export,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001
        print(format_error(exc), file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
