"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: validation problems exit 2, solver
problems exit 3.
"""


class VineError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(VineError, ValueError):
    """Inputs violate a documented invariant or precondition."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of an operation."""


class GeometryError(ValidationError):
    """Degenerate or infeasible geometry (polygons, trapezoids, bounds)."""


class SchemaError(ValidationError):
    """Malformed scene or table file.

    ``key`` is the dotted key path and ``line`` the 1-based source line,
    when known.
    """

    def __init__(self, message, key=None, line=None):
        self.message = message
        self.key = key
        self.line = line
        where = []
        if key:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class SolverError(VineError, RuntimeError):
    """A numerical procedure failed to deliver a result."""


class ConvergenceError(SolverError):
    pass


class ConditionError(SolverError):
    """The zero-parallel-force condition of the pouch model is violated.

    ``min_width`` is the lay-flat width that would have satisfied it.
    """

    def __init__(self, message, min_width=None):
        self.min_width = min_width
        super().__init__(message)


class UnreachableForceError(SolverError):
    """Requested force exceeds what the actuator can deliver.

    ``max_force`` carries the attainable maximum (N).
    """

    def __init__(self, message, max_force=None):
        self.max_force = max_force
        super().__init__(message)


class OutOfRangeError(SolverError):
    """A value falls outside a model's configured validity range."""


class SimulationError(SolverError):
    """A simulation step failed; ``trajectory`` holds what was recorded."""

    def __init__(self, message, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)
