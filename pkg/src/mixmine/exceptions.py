"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`MixMineError`,
so callers that only care about "something in the protocol went wrong" can
catch a single type.  Errors that are also plain argument problems subclass
:class:`ValueError` as well.
"""

from __future__ import annotations


class MixMineError(Exception):
    """Base class for all package errors."""


# secure sum -------------------------------------------------------------


class ParameterError(MixMineError, ValueError):
    """Invalid group parameters."""


class NotPrime(ParameterError):
    pass


class ModulusTooSmall(ParameterError):
    pass


class BitLengthTooSmall(ParameterError):
    pass


class TooFewSites(ParameterError):
    """Fewer than three parties; the sum would reveal the other party's input."""


class NotInvertible(MixMineError, ValueError):
    pass


class CountOutOfRange(MixMineError, ValueError):
    pass


class CountOverflow(CountOutOfRange):
    """A local support count does not fit below the modulus."""


class SiteIndexOutOfRange(MixMineError, ValueError):
    pass


class RoundMismatch(MixMineError):
    pass


class IncompleteSet(MixMineError):
    pass


# keystream ---------------------------------------------------------------


class BadSeedLength(MixMineError, ValueError):
    pass


class KeyOrderError(MixMineError):
    """Iteration keys requested out of stream order."""


# mining -----------------------------------------------------------------


class AlignmentMismatch(MixMineError, ValueError):
    pass


class MissingSubsetCount(MixMineError):
    pass


class UniverseTooLarge(MixMineError, ValueError):
    pass


# protocol / transport ----------------------------------------------------


class ProtocolError(MixMineError):
    pass


class DuplicateUpload(ProtocolError):
    pass


class LengthMismatch(ProtocolError):
    pass


class StaleRound(ProtocolError):
    pass


class PhaseError(ProtocolError):
    pass


class WireFormatError(ProtocolError):
    pass


class ReplayError(ProtocolError):
    pass


class ChannelIntegrityError(ProtocolError):
    pass


class Timeout(MixMineError):
    """A participant stayed silent past the configured deadline."""


class Closed(MixMineError):
    pass


class IoFailure(MixMineError):
    pass


# ingestion -----------------------------------------------------------------


class ParseError(MixMineError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyDataset(MixMineError, ValueError):
    pass
