"""Variational solver and certifier for 1-D elliptic differential inclusions.

The pipeline: describe a set-valued map F(s) = [lo(s), hi(s)], pick a
single-valued selection inside it, discretize the associated nonsmooth
energy on (0, L) with zero boundary values, find a negative-energy
minimizer and a mountain-pass point, then certify both as solutions of
the inclusion through the per-node multiplier w.
"""

__version__ = "0.1.0"

from .exprlang import (
    Expr,
    ExprDomainError,
    ExprError,
    ExprNameError,
    ExprSyntaxError,
    eval_expr,
    format_expr,
    parse_expr,
)
from .setvalued import (
    GrowthBound,
    GrowthReport,
    HypothesesReport,
    IntervalMap,
    MapConstructionError,
    NonConvergentLimitError,
    PiecewiseFn,
    UscReport,
    aumann,
    check_growth,
    check_hypotheses,
    check_usc,
)
from .selection import (
    STRATEGIES,
    PotentialTable,
    Selection,
    SelectionError,
    SelectionViolationError,
    build_table,
)
from .discretize import EnergyModel, Mesh1D, MinNormResult, interp_nodal
from .solvers import (
    BumpGeometry,
    CriticalPoint,
    GeometryError,
    SolverOptions,
    TwoSolutions,
    build_bump,
    default_geometry,
    lambda_star,
    minimize_global,
    mountain_pass,
    solve_two,
)
from .verify import Certificate, certify, extract_w
from .config import Config, ConfigError

__all__ = [
    "__version__",
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "ExprNameError",
    "ExprDomainError",
    "parse_expr",
    "eval_expr",
    "format_expr",
    "PiecewiseFn",
    "IntervalMap",
    "GrowthBound",
    "GrowthReport",
    "UscReport",
    "HypothesesReport",
    "MapConstructionError",
    "NonConvergentLimitError",
    "check_usc",
    "check_growth",
    "check_hypotheses",
    "aumann",
    "STRATEGIES",
    "Selection",
    "SelectionError",
    "SelectionViolationError",
    "PotentialTable",
    "build_table",
    "Mesh1D",
    "EnergyModel",
    "MinNormResult",
    "interp_nodal",
    "SolverOptions",
    "BumpGeometry",
    "CriticalPoint",
    "TwoSolutions",
    "GeometryError",
    "build_bump",
    "default_geometry",
    "lambda_star",
    "minimize_global",
    "mountain_pass",
    "solve_two",
    "Certificate",
    "certify",
    "extract_w",
    "Config",
    "ConfigError",
]
