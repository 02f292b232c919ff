"""
Error types raised by the toolkit
Each family maps onto one command-line exit code
"""


class BesselExitError(Exception):
    """Base class for toolkit errors"""

    exit_code = 1


class DomainError(BesselExitError):
    """Arguments outside the domain of an operation (index, time, position)"""

    exit_code = 3


class TruncationError(BesselExitError):
    """Series tail bound not met within the configured number of terms"""

    exit_code = 4


class SimulationAnomalyError(BesselExitError):
    """Simulation statistics inconsistent with their declared bounds"""

    exit_code = 5


class SimulationTimeoutError(SimulationAnomalyError):
    """A path did not exit before the configured maximum time"""


class InsufficientSamplesError(BesselExitError):
    """Too few samples left after filtering for a distribution comparison"""

    exit_code = 5


class ValidationFailure(BesselExitError):
    """At least one validation check failed"""

    exit_code = 1
