"""Numerical Finsler geometry of Zermelo navigation.

Randers and Kropina metrics from navigation data, their curvature through
truncated Taylor jets, composite winds, and sampling checks of the
S-curvature and flag-curvature results for these metrics.
"""

from .errors import FinslerNavError
from .finsler import (
    FinslerMetric,
    ImplicitNavigation,
    Kropina,
    Randers,
    Riemannian,
    curvature_report,
    flag_curvature,
    ricci,
    s_curvature,
)
from .modelspaces import get_model, model_names
from .navigation import composite, solve_implicit, u_map
from .spec import ManifoldSpec
from .verify import CHECKS, run_all, run_check

__version__ = "0.1.0"

__all__ = [
    "FinslerNavError",
    "FinslerMetric",
    "ImplicitNavigation",
    "Kropina",
    "Randers",
    "Riemannian",
    "curvature_report",
    "flag_curvature",
    "ricci",
    "s_curvature",
    "get_model",
    "model_names",
    "composite",
    "solve_implicit",
    "u_map",
    "ManifoldSpec",
    "CHECKS",
    "run_all",
    "run_check",
]
