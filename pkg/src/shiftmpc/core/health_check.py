class HealthCheckFail(object):
    """
    This object describes a failed health check.

    The code is a unique code describing the health check itself and must be
    unique for each check, so the list of checks can be documented (see
    `doc/health_checks.md`).
    """

    def __init__(self, code, reason):
        self.code = code
        self.reason = reason

    def __repr__(self):
        return f"HealthCheckFail({self.code!r}, {self.reason!r})"
