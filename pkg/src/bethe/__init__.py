"""Bethe vectors and their scalar products for gl(2)-invariant models.

Modules: ``rat_core`` (kernels and set notation), ``model`` (eigenvalues and
Bethe equations), ``oracle`` (dense spin-chain ground truth), ``solver``
(multistart Newton), ``scalar`` (determinant, symmetrized and action-based
scalar products) and ``cli``.
"""

from .errors import (
    AmbiguousMatch,
    BetheError,
    DegenerateRoot,
    DimensionCap,
    DimensionMismatch,
    MissingTerm,
    NoConvergence,
    OffShellError,
    ParseError,
    PoleError,
    UnstableLimit,
    ValidationError,
)
from .model import ModelSpec, bethe_residual, tau, tau_residue
from .scalar import extract_coefficient, gaudin_norm, hny_form, reflection_det, scalar_sum_form, slavnov_det
from .solver import SolveConfig, solve_bethe, verify_on_shell

__version__ = "0.1.0"

__all__ = [
    "AmbiguousMatch",
    "BetheError",
    "DegenerateRoot",
    "DimensionCap",
    "DimensionMismatch",
    "MissingTerm",
    "ModelSpec",
    "NoConvergence",
    "OffShellError",
    "ParseError",
    "PoleError",
    "SolveConfig",
    "UnstableLimit",
    "ValidationError",
    "bethe_residual",
    "extract_coefficient",
    "gaudin_norm",
    "hny_form",
    "reflection_det",
    "scalar_sum_form",
    "slavnov_det",
    "solve_bethe",
    "tau",
    "tau_residue",
    "verify_on_shell",
]
