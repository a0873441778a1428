"""Exception types raised by the refinement routines."""


class RefinementError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(RefinementError, ValueError):
    """Operands have incompatible or unsupported shapes."""


class DegenerateSpectrumError(RefinementError, ValueError):
    """Two singular values coincide (or one vanishes) where they must not.

    Attributes
    ----------
    pair : tuple of int
        Zero-based indices of the offending values. A vanishing value ``i``
        is reported as ``(i, i)``.
    """

    def __init__(self, pair, message=None):
        self.pair = tuple(pair)
        super().__init__(message or "degenerate singular values at indices %s" % (self.pair,))


class SeriesDivergenceError(RefinementError, ArithmeticError):
    """An orthonormality defect is too large for the series to converge."""


class ConvergenceError(RefinementError):
    """An iteration exhausted its budget without reaching its tolerance.

    Attributes
    ----------
    history : list
        Whatever the iteration recorded before giving up.
    """

    def __init__(self, message, history=None):
        self.history = list(history or [])
        super().__init__(message)


class CertificationError(RefinementError):
    """The starting triplet does not satisfy the convergence certificate."""

    def __init__(self, certificate):
        self.certificate = certificate
        super().__init__("certificate failed: epsilon=%.6g exceeds u0=%.6g"
                         % (float(certificate.epsilon), float(certificate.u0)))


class DivergenceError(RefinementError):
    """The accuracy stopped improving during a refinement run."""

    def __init__(self, trace, message=None):
        self.trace = trace
        super().__init__(message or "refinement diverged after %d iterations"
                         % (len(trace.records) - 1))


class PartitionError(RefinementError, ValueError):
    """No cluster partition satisfies the requested separation."""


class DeflationError(RefinementError, ValueError):
    """Deflation preconditions do not hold."""
