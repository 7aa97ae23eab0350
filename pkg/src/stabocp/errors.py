"""Exception hierarchy shared by the integrators and the optimal-control solver."""

from __future__ import annotations

__all__ = [
    "StabOCPError",
    "InvalidInputError",
    "DegenerateWeightsError",
    "PoleError",
    "OracleSizeError",
    "UnsupportedTableauError",
    "StepOverflowError",
    "DegenerateRescalingError",
    "StationarityError",
    "NewtonError",
    "LineSearchError",
    "SolverAbort",
]


class StabOCPError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(StabOCPError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateWeightsError(StabOCPError, ValueError):
    """A tableau has a zero weight ``b_i`` where the double adjoint needs ``1/b_i``."""


class PoleError(StabOCPError, ZeroDivisionError):
    """``I - zA`` is singular, so the stability function has a pole at ``z``."""


class OracleSizeError(StabOCPError, ValueError):
    """The brute-force tableau oracle was asked for too many stages."""


class UnsupportedTableauError(StabOCPError, ValueError):
    """The tableau structure cannot be handled by the requested routine."""


class StepOverflowError(StabOCPError, FloatingPointError):
    """A non-finite value appeared inside a time step."""

    def __init__(self, message: str, step: int | None = None, stage: int | None = None):
        super().__init__(message)
        self.step = step
        self.stage = stage


class DegenerateRescalingError(StabOCPError, ZeroDivisionError):
    """A costate rescaling factor ``alpha_j`` vanished."""


class StationarityError(StabOCPError, ArithmeticError):
    """The control stationarity equation could not be solved at a stage."""

    def __init__(self, message: str, step: int | None = None, stage: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.step = step
        self.stage = stage
        self.residual = residual


class NewtonError(StabOCPError, ArithmeticError):
    """Inner Newton iteration of an implicit stage failed to converge."""

    def __init__(self, message: str, step: int | None = None, stage: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.step = step
        self.stage = stage
        self.residual = residual


class LineSearchError(StabOCPError, ArithmeticError):
    """The line-search objective returned a non-finite value."""


class SolverAbort(StabOCPError, RuntimeError):
    """The outer optimization loop stopped on a numerical failure.

    ``report`` holds the partial :class:`~stabocp.solver.SolveReport`.
    """

    def __init__(self, message: str, report=None, cause: Exception | None = None):
        super().__init__(message)
        self.report = report
        self.cause = cause
