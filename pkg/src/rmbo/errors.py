"""Exception types raised by rmbo."""


class RMBOError(Exception):
    """Base class for all rmbo errors."""


class InvalidArgument(RMBOError, ValueError):
    """Input has the wrong shape, domain or value."""


class DegenerateBounds(InvalidArgument):
    """Nadir is not strictly worse than ideal in some objective."""


class NumericFailure(RMBOError, ArithmeticError):
    """Cholesky factorization failed even at maximum jitter."""


class TrainingFailure(RMBOError):
    """Every hyperparameter restart failed."""


class FitFailure(RMBOError):
    """A distribution fit (Gumbel or Laplace) did not converge."""
