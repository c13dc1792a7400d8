"""Shared exception types.

Every failure mode the engine promises to detect maps to one of these, so tests
can assert on the class rather than on message text.
"""


class EngineError(Exception):
    """Base class for all package-specific errors."""


class BackendMismatch(EngineError, TypeError):
    """Two operands live on different coefficient backends."""


class ShapeMismatch(EngineError, ValueError):
    """Operand shapes (num_vars, dimensions, index ranges) disagree."""


class InsufficientOrder(EngineError, ValueError):
    """A coefficient beyond the reliable truncation order was requested,
    or an operation needs more jet order than the input carries."""


class NotRepresentable(EngineError, ValueError):
    """The exact-rational backend cannot represent the requested value
    (irrational constant term, inexact root, ...)."""


class DegenerateInput(EngineError, ValueError):
    """A metric/Levi form/defining function is degenerate at the base point."""


class SingularSystem(EngineError, ArithmeticError):
    """An order-by-order linear solve that theory guarantees solvable was
    singular; signals an implementation or convention bug."""


class SpecError(EngineError, ValueError):
    """An input spec file failed to parse or validate."""
