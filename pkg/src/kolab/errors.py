class HypothesisError(ValueError):
    """Inputs violate a hypothesis the requested estimate relies on (CLI exit code 2)."""


class NumericalGuardError(ArithmeticError):
    """A numerical safety cap was hit, e.g. a series failed to converge (CLI exit code 3)."""
