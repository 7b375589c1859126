"""Residual checks, Lax connections and monodromy for diagonal metrics and
compatible nonlocal brackets of hydrodynamic type."""

from .catalog import CATALOG, CatalogEntry, get_example
from .errors import LameLaxError
from .expr import evaluate, parse, to_text
from .fields import FDBackend, GridSpec, SymbolicBackend
from .geometry import LameFrame, NonlocalSet, PencilSpec, rotation_coefficients
from .lax import build_connection, default_lambda_samples, monodromy_defect, transport, zero_curvature_residual
from .residuals import ProblemSpec, resolved_beta_residuals, system_residuals, verify_problem

__all__ = [
    "CATALOG", "CatalogEntry", "FDBackend", "GridSpec", "LameFrame", "LameLaxError", "NonlocalSet",
    "PencilSpec", "ProblemSpec", "SymbolicBackend", "build_connection", "default_lambda_samples",
    "evaluate", "get_example", "monodromy_defect", "parse", "resolved_beta_residuals",
    "rotation_coefficients", "system_residuals", "to_text", "transport", "verify_problem",
    "zero_curvature_residual",
]
