from .health_check import HealthCheckFail


class ShiftMpcError(Exception):
    """
    Base exception of the package. Each module derives its own family from it.
    """
