"""Exception taxonomy shared across the package."""


class GlbmError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(GlbmError, ValueError):
    """A parameter violates its domain constraints (e.g. |zeta| > rho, t < 0)."""


class InvalidUsageError(GlbmError):
    """An operation was called outside its stated preconditions."""


class NumericalOverflowError(GlbmError):
    """A simulated path produced non-finite entries; the trial is aborted."""


class SolverFailureError(GlbmError):
    """A dense eigenvalue / singular value backend failed to converge."""


class UndefinedTransformError(GlbmError):
    """An analytic transform is undefined at the requested point (all mass excluded)."""


class WindowTooSmallError(GlbmError):
    """Region window auto-expansion exceeded its hard cap without enclosing the set."""
