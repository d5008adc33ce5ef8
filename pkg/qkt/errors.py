"""Exceptions raised by the qkt package.

Everything derives from ``QktError`` so the CLI can map failures to exit
codes: ``ConfigError`` exits with 2, ``NumericalError`` (and all of its
subclasses) with 3.
"""


class QktError(Exception):
    """Base class for all qkt errors."""


class ConfigError(QktError):
    """Invalid run configuration."""


class NumericalError(QktError):
    """A numerical precondition or postcondition does not hold."""


class DomainError(NumericalError, ValueError):
    """Argument outside the domain of the operation."""


class NotDensityMatrix(NumericalError, ValueError):
    """Matrix is not Hermitian, positive semidefinite and of unit trace."""


class NotHermitian(NumericalError, ValueError):
    """Operator is not Hermitian."""


class DimensionMismatch(NumericalError, ValueError):
    """Operands live on Hilbert spaces of different dimension."""


class IndivisibleBlock(NumericalError, ValueError):
    """Block size does not divide the space or block being split."""


class SupportMismatch(NumericalError, ValueError):
    """First argument of a relative entropy is not supported by the second."""


class NotOnSphere(NumericalError, ValueError):
    """Classical phase point is off the unit sphere."""


class WindowError(NumericalError, ValueError):
    """Requested step window lies outside the series."""
