"""Exception types shared across the package."""


class CoopMecError(Exception):
    """Base class for all package errors."""


class ConfigError(CoopMecError):
    """Malformed generator configuration (empty or inverted ranges, bad keys)."""


class DomainError(CoopMecError):
    """Frequency at or below the minimum F/T_max where the power curve diverges."""


class InfeasiblePair(CoopMecError):
    """A (task, device) pair cannot meet the deadline under current budgets."""


class InfeasibleAssignment(CoopMecError):
    """An assignment violates at least one system constraint."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = ", ".join(str(v) for v in self.violations[:8])
        more = "" if len(self.violations) <= 8 else f" (+{len(self.violations) - 8} more)"
        super().__init__(f"{len(self.violations)} constraint violation(s): {lines}{more}")


class NonConvergence(CoopMecError):
    """Iterative solver hit its iteration cap; carries the best repaired result."""

    def __init__(self, message, assignment=None, trace=None):
        super().__init__(message)
        self.assignment = assignment
        self.trace = trace


class InstanceTooLarge(CoopMecError):
    """Exhaustive oracle refused: enumeration would be astronomically slow."""


class UnknownAlgorithm(CoopMecError):
    """Algorithm label not recognised by the dispatcher / overhead model."""
