"""Exception hierarchy shared by the symkit modules."""

from __future__ import annotations


class SymkitError(Exception):
    """Base class for all errors raised by symkit."""


class VariableMismatch(SymkitError):
    """Operands live in different variable contexts."""


class OrderOverflow(SymkitError):
    """A jet variable beyond the declared maximal order was required."""


class NotSolvedForm(SymkitError):
    """On-solution reduction could not be carried out with the given solved form."""


class NonSquare(SymkitError):
    """A square matrix was required."""


class NotCommuting(SymkitError):
    """A family of matrices expected to commute does not; carries a witness pair."""

    def __init__(self, i: int, j: int):
        self.witness = (i, j)
        super().__init__(f"matrices {i} and {j} do not commute")


class IrrationalEigenvalue(SymkitError):
    """A characteristic polynomial has a factor with no Gaussian-rational roots."""


class NotNilpotentAtLambda(SymkitError):
    """(G - lambda)^k does not vanish for the supplied lambda, k."""


class ClosureViolation(SymkitError):
    """A basis element's translation derivative left the spanned space."""

    def __init__(self, element_index: int, residual):
        self.element_index = element_index
        self.residual = residual
        super().__init__(
            f"derivative of basis element {element_index} is outside the space; "
            f"residual {residual}"
        )


class SpanMismatch(SymkitError):
    """Two solution routes produced different spans; carries a witness element."""

    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message)


class CapTooSmallWarning(UserWarning):
    """Hint: the search caps exclude a symmetry known to exist (the equation's own flow)."""


class DslSyntaxError(SymkitError):
    """Problem-file text failed to parse; carries position and expected tokens."""

    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        hint = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{line}:{column}: {message}{hint}")


class SemanticError(SymkitError):
    """Problem file parsed but is not meaningful (undeclared variable, bad form, ...)."""
