"""Pydantic models for run manifests and command-line overrides."""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..exceptions import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)


class RunOverrides(BaseModel):
    """Case entries that flags or manifests may replace."""

    model_config = ConfigDict(extra="forbid")

    cells: Optional[int] = Field(None, gt=0, description="Cells along the first axis; others keep square cells")
    dt: Optional[float] = Field(None, gt=0.0, description="Fixed time step; disables the CFL rule")
    cfl: Optional[float] = Field(None, gt=0.0, le=1.0)
    alpha: Optional[float] = None
    epsilon: Optional[float] = Field(None, gt=0.0)
    order: Optional[int] = Field(None, ge=1, le=2)
    end_time: Optional[float] = Field(None, ge=0.0)
    newton_tol: Optional[float] = Field(None, gt=0.0)
    linear_solver: Optional[Literal["direct", "bicgstab", "gmres", "dense"]] = None
    pressure_path: Optional[Literal["auto", "linear", "newton"]] = None

    def as_updates(self) -> Dict[str, Any]:
        return {key: value for key, value in self.model_dump().items() if value is not None}


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    case: str = Field(..., description="Built-in case name or path to a case file")
    overrides: RunOverrides = Field(default_factory=RunOverrides)
    scheme: Literal["ap", "explicit"] = "ap"
    output_dir: Optional[Path] = None
    formats: Optional[List[Literal["csv", "vtk"]]] = None
    snapshots: Optional[List[float]] = Field(None, description="Snapshot times; the final state is always written")
    every: Optional[int] = Field(None, gt=0, description="Also write a snapshot every N steps")
    dump_system: Optional[Path] = None

    @field_validator("snapshots")
    @classmethod
    def _sorted_times(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(t < 0.0 for t in value):
            raise ValueError("snapshot times must be non-negative")
        return None if value is None else sorted(value)

    def with_flags(self, **flags: Any) -> RunManifest:
        """Return a copy where every non-None flag wins over the manifest."""

        override_keys = set(RunOverrides.model_fields)
        overrides = self.overrides.model_dump()
        top = self.model_dump()
        for key, value in flags.items():
            if value is None:
                continue
            if key in override_keys:
                overrides[key] = value
            else:
                top[key] = value
        top["overrides"] = overrides
        return validate_model(RunManifest, top)


class ConvergenceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    case: str
    resolutions: List[int] = Field(..., min_length=1)
    reference: Union[Literal["exact"], int] = "exact"
    dt_factor: Optional[float] = Field(None, gt=0.0, description="dt = dt_factor * dx ** dt_power")
    dt_power: float = Field(2.0, ge=0.0)
    field: Literal["p", "rho", "u", "h"] = "p"
    overrides: RunOverrides = Field(default_factory=RunOverrides)
    threads: int = Field(1, ge=1)

    @field_validator("resolutions")
    @classmethod
    def _increasing(cls, value: List[int]) -> List[int]:
        if any(n < 2 for n in value):
            raise ValueError("every resolution needs at least 2 cells")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("resolutions must be strictly increasing")
        return value

    @model_validator(mode="after")
    def _finer_reference(self) -> ConvergenceRequest:
        if isinstance(self.reference, int) and self.reference <= max(self.resolutions):
            raise ValueError("the reference resolution must be finer than every study resolution")
        return self


def validate_model(model: Type[ModelT], data: Any) -> ModelT:
    """Validate ``data`` and turn pydantic errors into ConfigError."""

    try:
        return model.model_validate(data)
    except ValidationError as exc:
        problems = [
            {"field": ".".join(str(part) for part in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        raise ConfigError(f"invalid {model.__name__}", details={"errors": problems}) from exc


def load_manifest(path: Path) -> RunManifest:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    return validate_model(RunManifest, raw or {})
