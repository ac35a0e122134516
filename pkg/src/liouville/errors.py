"""Exception types shared across the liouville package."""


class LiouvilleError(Exception):
    """Base class for all package-specific errors."""


class PoleError(LiouvilleError):
    """Evaluation requested at (or indistinguishably close to) a pole."""


class PrecisionError(LiouvilleError):
    """A quadrature or series could not reach the requested tolerance."""


class DivergenceError(LiouvilleError):
    """Series parameters outside the convergence domain (e.g. 2F1 with
    non-positive-integer c, or |z| >= 1)."""


class ContinuationError(LiouvilleError):
    """Shift continuation exceeded its budget or hit an inconsistent state."""


class BoundsError(LiouvilleError):
    """Requested moment/exponent outside the finite-moment region."""


class SeibergBoundError(LiouvilleError):
    """Weight configuration violates the bounds required by an estimator."""


class VarianceBlowupError(LiouvilleError):
    """Monte Carlo configuration with provably infinite per-sample variance."""


class SingularCellError(LiouvilleError):
    """A kernel evaluation landed on a non-integrable cell midpoint."""


class RegimeError(LiouvilleError):
    """Weights outside every regime covered by the four-point comparator."""


class FactorizationError(LiouvilleError):
    """A dense covariance matrix stayed indefinite after the jitter budget."""


class InsufficientTailError(LiouvilleError):
    """Too few exceedances above the largest threshold to fit a tail."""
