"""Exception hierarchy shared by every module."""


class ReconError(Exception):
    """Base class for all errors raised by mlsrecon."""


class InvalidParam(ReconError, ValueError):
    pass


class EmptyCloud(ReconError):
    pass


class EmptyData(ReconError):
    pass


class EmptyMesh(ReconError):
    pass


class TooFewNeighbors(ReconError):
    def __init__(self, found, required):
        super().__init__(f"{found} neighbors within support, need at least {required}")
        self.found = found
        self.required = required


class DegenerateNeighborhood(ReconError):
    pass


class NoConvergence(ReconError):
    """Plane iteration hit ``max_iter``; ``last`` carries the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class SingularSystem(ReconError):
    pass


class ParseError(ReconError):
    def __init__(self, reason, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{reason}")
        self.reason = reason
        self.line = line
        self.path = path


class WorkerFailure(ReconError):
    pass
