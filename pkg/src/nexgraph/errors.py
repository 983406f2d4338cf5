"""Exception hierarchy shared across the engine."""


class NexgraphError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(NexgraphError):
    """Invalid attribute schema or value/schema mismatch."""


class ConfigError(NexgraphError):
    """Invalid engine or run configuration."""


class IngestError(NexgraphError):
    """Malformed input graph file.

    Carries the 1-based line number when the failure is tied to a line.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class StorageError(NexgraphError):
    """Index segment file I/O or decode failure."""


class StateError(NexgraphError):
    """Operation attempted in an invalid lifecycle state."""


class RoutingError(NexgraphError):
    """Message addressed to an unknown worker."""


class BarrierTimeoutError(NexgraphError):
    """A worker failed to reach the superstep barrier in time."""


class ParameterError(NexgraphError):
    """Bad algorithm parameter (e.g. unknown source vertex)."""


class ExpressionError(NexgraphError):
    """A neighborhood expression raised; wraps vertex and superstep context."""

    def __init__(self, vertex: int, superstep: int, cause: BaseException):
        super().__init__(
            f"neighborhood expression failed at vertex {vertex}, "
            f"superstep {superstep}: {cause!r}"
        )
        self.vertex = vertex
        self.superstep = superstep
        self.cause = cause
