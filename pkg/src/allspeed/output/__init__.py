"""Run outputs: environment settings, run record and file writers."""

from .config import OutputConfig
from .schema import RunRecord, RunStatus
from .writer import read_csv, write_error_report, write_snapshot, write_summary

__all__ = [
    "OutputConfig",
    "RunRecord",
    "RunStatus",
    "read_csv",
    "write_error_report",
    "write_snapshot",
    "write_summary",
]
