"""Exception types raised across the simulator."""


class AeromecError(Exception):
    """Base class for all library errors."""


class InvalidScenario(AeromecError):
    """A twin or scenario violates a structural invariant."""


class InvalidParameter(AeromecError):
    """A physical parameter is outside its valid domain."""


class DegenerateGeometry(AeromecError):
    """Transmitter and receiver are colocated (zero distance)."""


class UnreachableUav(AeromecError):
    """A UAV with zero link capacity was asked to carry data."""


class InfeasibleDeadline(AeromecError):
    """Transmission alone already exceeds the task deadline."""


class OracleScaleExceeded(AeromecError):
    """Exhaustive-search request is too large to enumerate."""


class InvalidComparison(AeromecError):
    """Partition fragments cover different UAV sets or indices clash."""


class IoFailure(AeromecError):
    """A dataset or output path could not be read or written."""


class EmptyAggregate(AeromecError):
    """Aggregation was requested over zero slot records."""
