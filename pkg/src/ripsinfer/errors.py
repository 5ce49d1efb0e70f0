"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit
structured error JSON without string-matching messages.
"""


class RipsInferError(Exception):
    code = "error"


class InvalidParameterError(RipsInferError):
    code = "invalid-parameter"


class EmptyInputError(RipsInferError):
    code = "empty-input"


class DegenerateInputError(RipsInferError):
    code = "degenerate-input"


class SupportError(RipsInferError):
    """Data falls outside the support a distribution is being fit on."""

    code = "support"


class ConvergenceError(RipsInferError):
    code = "convergence"


class ResourceLimitError(RipsInferError):
    """Simplex budget exceeded; raised instead of silently truncating."""

    code = "resource-limit"


class FitFailedError(RipsInferError):
    """Every candidate family failed to fit."""

    code = "all-candidates-failed"
