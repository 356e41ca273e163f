#!/usr/bin/env python3
"""Run the colliding-pulses, Sod and Lax convergence studies and print their error tables."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from allspeed.models.manifest import ConvergenceRequest, RunOverrides  # noqa: E402
from allspeed.services.run_manager import convergence_study  # noqa: E402

logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
logger = logging.getLogger(__name__)

STUDIES = {
    "colliding_pulses": ConvergenceRequest(
        case="colliding_pulses",
        resolutions=[100, 200, 400],
        reference=3200,
        dt_factor=0.05,
        dt_power=2.0,
        overrides=RunOverrides(alpha=10.0, order=2),
    ),
    "sod": ConvergenceRequest(case="sod", resolutions=[100, 200, 400], dt_factor=1.0, dt_power=2.0),
    "lax": ConvergenceRequest(case="lax", resolutions=[100, 200, 400], dt_factor=1.0, dt_power=2.0),
}


def main() -> int:
    parser = argparse.ArgumentParser(description="Reproduce the convergence tables")
    parser.add_argument("studies", nargs="*", choices=sorted(STUDIES), help="subset of studies (default: all)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--output-dir", type=Path, help="also write each table as CSV here")
    args = parser.parse_args()

    for name in args.studies or list(STUDIES):
        request = STUDIES[name].model_copy(update={"threads": args.threads})
        path = args.output_dir / f"{name}_errors.csv" if args.output_dir else None
        report = convergence_study(request, path)
        print(f"\n{name} ({report.field} against {report.reference})")
        print(f"{'cells':>8} {'dx':>10} {'L1 error':>12} {'order':>7}")
        for row in report.rows:
            order = "" if row.order is None else f"{row.order:.2f}"
            print(f"{row.cells:>8d} {row.dx:>10.4g} {row.error:>12.3e} {order:>7}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
