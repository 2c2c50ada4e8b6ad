"""Exception hierarchy shared by every prlab module."""


class PrlabError(Exception):
    """Base class for all library errors."""


class DomainError(PrlabError, ValueError):
    """An argument lies outside the documented domain (n=0, p outside (0,1), ...)."""


class DataRangeError(PrlabError, ValueError):
    """A request reaches beyond the data that is available."""


class BlockFormatError(PrlabError):
    """A block file could not be decoded."""


class BadMagicError(BlockFormatError):
    pass


class VersionMismatchError(BlockFormatError):
    pass


class TruncatedBlockError(BlockFormatError):
    pass


class ChecksumMismatchError(BlockFormatError):
    pass


class DSLError(PrlabError, ValueError):
    """Base class for test-language errors."""


class DSLSyntaxError(DSLError):
    def __init__(self, message, position):
        super().__init__(f"syntax error at offset {position}: {message}")
        self.position = position


class DSLTypeError(DSLError):
    def __init__(self, message, position=None):
        where = f" at offset {position}" if position is not None else ""
        super().__init__(f"type error{where}: {message}")
        self.position = position


class KeyGenerationError(PrlabError, ValueError):
    pass


class VerdictFailure(PrlabError):
    """Raised by the CLI layer when a battery or fact check fails."""
