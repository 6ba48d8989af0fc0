"""Exception types raised across the package."""


class OutsideBulkError(ValueError):
    """A real argument lies on or outside the edge of [-2, 2]."""


class EscapedBulkError(ArithmeticError):
    """A recurrence value grew past the overflow guard."""


class ValidationFailure(RuntimeError):
    """A numerically certified bound was violated on its sample grid."""


class EnvelopeError(ValueError):
    """The decay envelope does not tend to zero within the scan limit."""


class DegenerateDiagonal(ArithmeticError):
    """The kernel diagonal K_n(x, x) vanished."""


class ConfluentNonReal(ValueError):
    """Confluent kernel requested at a non-real point with the derivative path disabled."""


class CapExceeded(RuntimeError):
    """No gap threshold up to ``n_cap`` satisfied the certification conditions.

    ``best`` holds the certificate with the smallest observed error and
    ``partial`` (when raised from :func:`generate_spec`) the spec and
    certificates placed so far.
    """

    def __init__(self, message, best=None, partial=None):
        super().__init__(message)
        self.best = best
        self.partial = partial
