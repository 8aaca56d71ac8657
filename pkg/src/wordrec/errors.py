"""Exception types shared across the package."""


class WordRecError(Exception):
    """Base class for every error raised by this package."""


# --- imaging ---

class MissingFile(WordRecError):
    pass


class UnsupportedFormat(WordRecError):
    pass


class MalformedHeader(WordRecError):
    pass


class EmptyImage(WordRecError):
    pass


class InvalidWidth(WordRecError):
    pass


class NoForeground(WordRecError):
    pass


class DegenerateBlock(WordRecError):
    pass


# --- features ---

class InvalidOrder(WordRecError):
    pass


# --- quantize ---

class TooFewVectors(WordRecError):
    pass


class DimensionMismatch(WordRecError):
    pass


# --- dhbn ---

class InvalidCounts(WordRecError):
    pass


class SymbolOutOfRange(WordRecError):
    pass


class EmptySequence(WordRecError):
    pass


class ImpossibleSequence(WordRecError):
    pass


class NoSequences(WordRecError):
    pass


class EmptyLexicon(WordRecError):
    pass


# --- config ---

class UnknownConfigKey(WordRecError):
    pass


class BadConfigValue(WordRecError):
    pass


# --- harness / persistence ---

class MalformedManifest(WordRecError):
    pass


class MissingImage(WordRecError):
    pass


class IoFailure(WordRecError):
    pass


class ClassTooSmall(WordRecError):
    pass


class EmptyEvalSet(WordRecError):
    pass


class VersionMismatch(WordRecError):
    pass


class ChecksumMismatch(WordRecError):
    pass
