"""Output settings taken from the environment."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

from ..exceptions import ConfigError

FORMATS = ("csv", "vtk")


@dataclass
class OutputConfig:
    """Where runs are written and in which snapshot formats."""

    directory: Path = Path("runs")
    formats: List[str] = field(default_factory=lambda: ["csv"])

    @classmethod
    def from_env(cls) -> OutputConfig:
        """Create configuration from environment variables."""
        formats = [f.strip() for f in os.getenv("ALLSPEED_FORMATS", "csv").split(",") if f.strip()]
        unknown = [f for f in formats if f not in FORMATS]
        if unknown:
            raise ConfigError("ALLSPEED_FORMATS names unknown formats", details={"unknown": unknown})
        return cls(
            directory=Path(os.getenv("ALLSPEED_OUTPUT_DIR", "runs")),
            formats=formats,
        )

    def run_directory(self, name: str) -> Path:
        return self.directory / name
