"""Exception hierarchy shared by all modules.

Numeric failures (divergence, singular systems, degenerate problems) derive
from :class:`NumericError`; bad configuration or misuse derives from
:class:`UsageError`. The CLI maps these two families to distinct exit codes.
"""


class SparseGlarmaError(Exception):
    """Base class for all library errors."""


class NumericError(SparseGlarmaError):
    """Base class for numeric failures during estimation or selection."""


class UsageError(SparseGlarmaError):
    """Base class for invalid configuration or misuse of an operation."""


class OverflowGuard(NumericError):
    """The state recursion left the numerically safe region (|W_t| too large)."""


class NonFiniteCurvature(NumericError):
    """Gradient or Hessian block contains non-finite entries."""


class IndefiniteHessian(NumericError):
    """Negated curvature matrix has a significantly negative eigenvalue."""


class SingularSystem(NumericError):
    """Newton system is rank deficient and ridge retries cannot fix it."""


class NoConvergence(NumericError):
    """An iterative solver exhausted its budget without converging."""


class DegenerateProblem(NumericError):
    """The pseudo-regression problem carries no usable signal."""


class SubsampleTooSmall(NumericError):
    """Subsample size below the minimum needed for a lasso fit."""


class MissingOracle(UsageError):
    """An oracle-dependent operation was requested without the oracle."""


class ConfigError(UsageError):
    """A configuration value is outside its documented domain."""
