"""Exception types raised by the numerical kernel, the solvers and the harness."""


class DistiaError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(DistiaError, ValueError):
    pass


class SingularMatrix(DistiaError):
    """A matrix that must be inverted is singular to working precision.

    ``link`` carries the (i, k) index of the offending channel link when the
    inversion happened inside the cascade computation.
    """

    def __init__(self, message, smin=None, link=None):
        super().__init__(message)
        self.smin = smin
        self.link = link


class NumericalFailure(DistiaError):
    pass


class EmptyComplement(DistiaError):
    pass


class RankDeficient(DistiaError, ValueError):
    pass


class CodebookTooLarge(DistiaError, ValueError):
    pass


class ScenarioError(DistiaError, ValueError):
    pass


class SweepAborted(DistiaError):
    """Too many trials failed at one SNR point."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
