"""Validated request models for runs and convergence studies."""

from .manifest import ConvergenceRequest, RunManifest, RunOverrides, load_manifest, validate_model

__all__ = ["ConvergenceRequest", "RunManifest", "RunOverrides", "load_manifest", "validate_model"]
