"""Custom exceptions for the MCCS miner.

Every error raised by the library derives from MccsError so that the CLI can
map library failures to the data-error exit status in one place.
"""


class MccsError(Exception):
    """Base exception for all miner errors."""

    pass


class SchemaError(MccsError):
    """Raised when a schema descriptor is malformed or inconsistent."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        self.message = message
        super().__init__(f"Schema error on '{field}': {message}")


class IngestError(MccsError):
    """Raised when a data file cannot be read as declared."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class UnknownNodeError(MccsError):
    """Raised when a label is not part of an entity type's domain."""

    def __init__(self, entity_type: str, label: str) -> None:
        self.entity_type = entity_type
        self.label = label
        super().__init__(f"Unknown node '{label}' of entity type '{entity_type}'")


class UnknownRelationshipError(MccsError):
    """Raised when a relationship type name is not declared."""

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"Unknown relationship type '{name}'")


class PatternError(MccsError):
    """Raised for invalid patterns or malformed pattern records."""

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(message)


class ConvergenceError(MccsError):
    """Raised when the background model does not reach its tolerance."""

    def __init__(
        self,
        relationship: str,
        residual: float,
        iterations: int,
        degenerate: bool = False,
    ) -> None:
        self.relationship = relationship
        self.residual = residual
        self.iterations = iterations
        self.degenerate = degenerate
        if degenerate:
            message = (
                f"Model for '{relationship}' cannot converge: degenerate margins "
                "force some cells to 0 or 1"
            )
        else:
            message = (
                f"Model for '{relationship}' did not converge after {iterations} "
                f"sweeps (worst margin residual {residual:.3e})"
            )
        super().__init__(message)


class ScoringError(MccsError):
    """Raised when a pattern cannot be scored."""

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(message)


class EmbedError(MccsError):
    """Raised when a pattern cannot be planted as requested."""

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(message)
