"""Exact jet arithmetic for conformal and CR curvature invariants.

The package computes, at a single base point, the normal-form even
extension of a metric, the associated conformally invariant operators
and curvature scalars, their hyperbolic-chart counterparts, and the
analogous constructions for CR hypersurfaces.  All identity checks run
on exact rational coefficients; floats appear only in quadrature.
"""

from .backend import EXACT, FLOAT, rational
from .errors import (
    BackendMismatch,
    DegenerateInput,
    EngineError,
    InsufficientOrder,
    NotRepresentable,
    ShapeMismatch,
    SingularSystem,
    SpecError,
)
from .jets import Jet, monomials

__version__ = "0.1.0"

__all__ = [
    "EXACT",
    "FLOAT",
    "rational",
    "Jet",
    "monomials",
    "EngineError",
    "BackendMismatch",
    "ShapeMismatch",
    "InsufficientOrder",
    "NotRepresentable",
    "DegenerateInput",
    "SingularSystem",
    "SpecError",
]
