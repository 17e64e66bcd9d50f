"""Exception hierarchy shared by every dyntop module."""


class DyntopError(Exception):
    """Base class for all errors raised by dyntop."""


class HorizonError(DyntopError, ValueError):
    """A shift or index exceeds the horizon, or two horizons disagree."""


class InadmissibleError(DyntopError, ValueError):
    """A word, point or open set is not admissible for the system."""


class UniverseTooLargeError(DyntopError, ValueError):
    """An exhaustive oracle was asked to enumerate a universe above its bound."""


class FIPHoldsError(DyntopError):
    """Raised when a construction needs an empty intersection but one exists.

    The least common element is stored on ``witness``.
    """

    def __init__(self, witness: int):
        super().__init__(f"generators share the element {witness}; FIP holds")
        self.witness = witness


class SchemaError(DyntopError, ValueError):
    """A JSON document does not match the expected layout."""
