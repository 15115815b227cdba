"""Exception hierarchy shared by all modules."""


class XXZSovError(Exception):
    """Base class for every error raised by the package."""


class DomainError(XXZSovError, ValueError):
    """A spectral parameter or index lies outside the domain of a formula."""


class SovConditionError(XXZSovError):
    """The inhomogeneities violate the SOV existence condition."""

    def __init__(self, violations):
        self.violations = list(violations)
        pairs = ", ".join(f"(a={a}, b={b}, j={j})" for a, b, j in self.violations)
        super().__init__(f"SOV condition violated by {pairs}")


class SingularMatrixError(XXZSovError, ArithmeticError):
    """A pivot fell below the singularity threshold during elimination."""

    def __init__(self, index, pivot, threshold):
        self.index = index
        self.pivot = pivot
        self.threshold = threshold
        super().__init__(
            f"matrix is singular to working precision: |pivot {index}| = {abs(pivot):.3e} "
            f"<= {threshold:.3e}"
        )


class ConditioningError(XXZSovError, ArithmeticError):
    """A linear system is too ill-conditioned to trust its solution."""

    def __init__(self, message, condition_number):
        self.condition_number = condition_number
        super().__init__(f"{message} (condition estimate {condition_number:.3e})")


class ConvergenceError(XXZSovError, ArithmeticError):
    """An iterative method failed to converge."""


class UnsupportedError(XXZSovError, NotImplementedError):
    """The requested computation is not available for these parameters."""
