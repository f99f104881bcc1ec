"""Analytical CMP cache hierarchy models with constrained optimization of
hierarchy depth and per-level area allocation."""

__version__ = "0.1.0"

from .params import (
    ConstraintSet,
    DelayBreakdown,
    Depth,
    DomainError,
    HierarchyPoint,
    QueueSpec,
    TechParams,
)
from .models import (
    access_time_private,
    access_time_shared,
    amat,
    amat_const_hit_time,
    amat_scaled_hit_time,
    dram_queue_delay,
    miss_rate_private_inner,
    miss_rate_private_l1,
    miss_rate_shared,
    noc_queue_delay,
    scaled_hit_time_minimizer,
)
from .fit import AccessTimeSample, FitResult, InsufficientDataError, fit_power_law
from .optimize import (
    ConfigResult,
    KktReport,
    OptimizationResult,
    constraint_values,
    kkt_residual,
    optimize,
    optimize_config,
    power_of,
)
from .gridsearch import GridResult, GridSpec, grid_search, refine_search

__all__ = [
    "ConstraintSet", "DelayBreakdown", "Depth", "DomainError",
    "HierarchyPoint", "QueueSpec", "TechParams",
    "access_time_private", "access_time_shared", "amat",
    "amat_const_hit_time", "amat_scaled_hit_time", "dram_queue_delay",
    "miss_rate_private_inner", "miss_rate_private_l1", "miss_rate_shared",
    "noc_queue_delay", "scaled_hit_time_minimizer",
    "AccessTimeSample", "FitResult", "InsufficientDataError", "fit_power_law",
    "ConfigResult", "KktReport", "OptimizationResult", "constraint_values",
    "kkt_residual", "optimize", "optimize_config", "power_of",
    "GridResult", "GridSpec", "grid_search", "refine_search",
    "__version__",
]
