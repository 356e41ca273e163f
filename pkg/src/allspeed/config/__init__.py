"""Case definitions and the built-in benchmark registry."""

from .cases import CaseDefinition, apply_overrides, dump_case, list_cases, load_case

__all__ = ["CaseDefinition", "apply_overrides", "dump_case", "list_cases", "load_case"]
