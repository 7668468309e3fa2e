"""Exception types, grouped by how the CLI reports them.

DomainError subclasses -> exit code 2 (bad inputs / preconditions)
ComputationError subclasses -> exit code 1 (a computation reported failure)
DocumentError -> exit code 3 (I/O and configuration)
"""


class LorenzError(Exception):
    pass


class DomainError(LorenzError):
    """Input outside the mathematical domain of an operation."""


class BranchDomainError(DomainError):
    """Point outside the domain of the requested branch."""


class CriticalPointError(DomainError):
    """The map has no value at its critical point."""


class InvalidMapError(DomainError):
    """Parameters or branches violate the defining map conditions."""


class ComputationError(LorenzError):
    pass


class NotRenormalizableError(ComputationError):
    def __init__(self, reason, detail=""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"not renormalizable: {reason}" + (f" ({detail})" if detail else ""))


class PullbackError(ComputationError):
    def __init__(self, msg="non-monotone pullback"):
        super().__init__(msg)


class NoRootError(ComputationError):
    """Root bracketing found no admissible boundary point."""


class ConvergenceError(ComputationError):
    """Iteration budget exhausted; carries the residual trace."""

    def __init__(self, msg, trace=None):
        self.trace = list(trace) if trace is not None else []
        super().__init__(msg)


class DocumentError(LorenzError):
    """Malformed document or configuration."""
