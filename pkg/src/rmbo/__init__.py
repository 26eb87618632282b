"""Preference-based multi-objective Bayesian optimisation.

Mono-surrogate (one GP on the achievement scalarizing function) and
multi-surrogate (one GP per objective, max-of-Gaussians ASF density
approximated by a Gumbel or a Laplace fit) loops, with DTLZ benchmarks
and an experiment runner.
"""

from rmbo.errors import (
    DegenerateBounds,
    FitFailure,
    InvalidArgument,
    NumericFailure,
    RMBOError,
    TrainingFailure,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateBounds",
    "FitFailure",
    "InvalidArgument",
    "NumericFailure",
    "RMBOError",
    "TrainingFailure",
    "__version__",
]
