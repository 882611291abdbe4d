"""Exception hierarchy shared across vismc modules."""


class VismcError(Exception):
    """Base class for all errors raised by vismc."""


class MalformedInput(VismcError):
    """JSON or schema violation in an input document.

    ``path`` is a JSON-pointer-like location of the offending value.
    """

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class InvalidSpecification(VismcError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid specification: " + "; ".join(errors))
        self.errors = list(errors)


class ParseError(VismcError):
    """The query does not fit the clause grammar."""

    def __init__(self, message: str, position: int | None = None):
        where = f" at token {position}" if position is not None else ""
        super().__init__(message + where)
        self.position = position


class SynthesisError(VismcError):
    """A triplet cannot be compiled into a routine (signals a bad triplet)."""

    error_class = "BadTriplet"


class StaticCheckError(VismcError):
    """A routine program failed static checks (signals bad routine generation)."""

    error_class = "BadRoutineGeneration"


class UnknownImage(VismcError):
    pass


class BackendError(VismcError):
    """Any failure inside a perception backend. Surfaces as BackendFailure."""


class TransportError(BackendError):
    pass


class ProtocolError(BackendError):
    pass


class RemoteError(BackendError):
    def __init__(self, code: int, message: str):
        super().__init__(f"remote error {code}: {message}")
        self.code = code


class CacheMiss(BackendError):
    pass


class StoreCorrupt(VismcError):
    pass


class MissingVerdict(VismcError):
    pass


class DuplicateVerdict(VismcError):
    pass


class MissingScore(VismcError):
    pass


class EmptyBaseline(VismcError):
    pass


class InsufficientCases(VismcError):
    pass


class MissingRanking(VismcError):
    pass


class PlanError(VismcError):
    pass


class PlanMismatch(VismcError):
    pass


class StoreError(VismcError):
    pass
