class DimensionError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    """The scenario admits no schedule meeting every constraint.

    ``report`` carries the constraint diagnostics when available.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class AllocationError(InfeasibleError):
    def __init__(self, message, gap_kwh):
        super().__init__(message)
        self.gap_kwh = gap_kwh


class NonConvexError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class ScenarioError(ValueError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path
