"""Exception types and the process exit codes they map to."""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CORRUPT = 3
EXIT_PREDICTOR_MISMATCH = 4
EXIT_BRIDGE_FAILURE = 5


class LmzipError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class InvalidVocabularyError(LmzipError):
    """Vocabulary violates its structural requirements or cannot be parsed."""


class VocabularyTooLargeError(LmzipError):
    """Vocabulary size exceeds what the fixed-point PMF can represent."""


class InvalidPmfError(LmzipError):
    """Weight vector is not a valid quantized PMF."""


class UndefinedStatisticError(LmzipError):
    """Statistic requested over an empty stream or batch."""


class CorruptStreamError(LmzipError):
    """Token, rank, or codec payload is inconsistent and cannot be decoded."""

    exit_code = EXIT_CORRUPT


class PredictorMismatchError(LmzipError):
    """Decoder-side predictor configuration does not match the container."""

    exit_code = EXIT_PREDICTOR_MISMATCH


class BridgeError(LmzipError):
    """External predictor is unreachable or sent a malformed response."""

    exit_code = EXIT_BRIDGE_FAILURE
