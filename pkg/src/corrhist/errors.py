"""Exception hierarchy for corrhist."""


class CorrhistError(Exception):
    """Base class for all corrhist errors."""


class FormatError(CorrhistError):
    """Malformed input file (bad markup, unknown version, bad header).

    ``byte_offset`` locates the problem in the raw (decompressed) stream
    when known, -1 otherwise.
    """

    def __init__(self, message: str, byte_offset: int = -1, source: str | None = None):
        self.byte_offset = byte_offset
        self.source = source
        where = []
        if source:
            where.append(source)
        if byte_offset >= 0:
            where.append(f"byte {byte_offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class IntegrityError(CorrhistError):
    """Data violates a model invariant (duplicate mention, dangling key, ...)."""


class UnknownTimeError(CorrhistError):
    """An operation was asked about a date at which no observation exists."""


class PlanError(CorrhistError):
    """A synthetic edit plan cannot be realized on the current state."""
