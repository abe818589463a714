"""Exception types shared across the toolkit.

Every numerical guard raises one of these with the measured deviation in the
message, so failures are diagnosable from logs alone.
"""


class OqbmError(Exception):
    """Base class for all toolkit errors."""


class NonHermitianError(OqbmError):
    """Matrix fails a Hermiticity check; carries the measured deviation."""

    def __init__(self, deviation, tol):
        super().__init__(f"Hermiticity deviation {deviation:.3e} exceeds tolerance {tol:.1e}")
        self.deviation = deviation
        self.tol = tol


class TraceDeviationError(OqbmError):
    def __init__(self, deviation, tol):
        super().__init__(f"trace deviates from 1 by {deviation:.3e} (tolerance {tol:.1e})")
        self.deviation = deviation
        self.tol = tol


class NegativeEigenvalueError(OqbmError):
    def __init__(self, min_eig, tol):
        super().__init__(f"eigenvalue {min_eig:.3e} below -{tol:.1e}")
        self.min_eig = min_eig
        self.tol = tol


class DimensionMismatchError(OqbmError):
    """Operands have incompatible shapes for the requested operation."""


class NonFiniteError(OqbmError):
    """A NaN or infinity appeared where a finite value is required."""


class BudgetExceededError(OqbmError):
    """Exact enumeration was requested beyond its configured size limit."""


class DegenerateDirectionError(OqbmError):
    """Measurement direction makes an outcome probability vanish."""


class ZeroProbabilityBranchError(OqbmError):
    """A measurement branch with essentially zero probability was drawn."""


class QuadratureDriftError(OqbmError):
    """Grid-quadrature normalization drifted beyond its guard threshold."""


class SingularNormalizationError(OqbmError):
    """Completeness-sum matrix is numerically singular; cannot unitarize."""


class ProjectionOverflowError(OqbmError):
    """Pre-projection state error is too large; the time step is too coarse."""


class NonSPDMetricError(OqbmError):
    """Noise metric is not symmetric positive-definite."""


class CFLViolationError(OqbmError):
    def __init__(self, dt, bound):
        super().__init__(f"dt={dt:.3e} exceeds explicit-scheme stability bound {bound:.3e}")
        self.dt = dt
        self.bound = bound


class WindowViolationError(OqbmError):
    """Exit-probability window must satisfy k*pi <= lo < theta <= hi < (k+1)*pi."""


class QuadratureNonConvergenceError(OqbmError):
    """Adaptive quadrature failed to converge to the requested accuracy."""


class InsufficientJumpsError(OqbmError):
    """Too few passage-time samples for meaningful jump statistics."""


class RootTrackingAmbiguityError(OqbmError):
    """Cubic roots cannot be unambiguously continued from their k=0 values."""


class IllConditionedFitError(OqbmError):
    """Least-squares defect fit is degenerate (defect numerically zero)."""


class ConfigInvalidError(OqbmError):
    """Run configuration failed schema or consistency validation."""


class InsufficientTimeWarning(UserWarning):
    """Requested horizon is below the diffusive window for this estimate."""
