"""Exception types shared across the package."""


class ResilienceError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ResilienceError):
    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.field = field
        self.line = line


class ValidationError(ResilienceError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        text = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(f"model failed validation: {text}")


class StrategyIncompatible(ResilienceError):
    pass


class Infeasible(ResilienceError):
    """A threshold-constrained optimisation problem has no feasible point."""


class BudgetExceeded(ResilienceError):
    pass


class NotConverged(ResilienceError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PreconditionViolated(ResilienceError):
    pass


class OverlappingComponents(ResilienceError):
    pass


class AssumptionViolated(ResilienceError):
    pass
