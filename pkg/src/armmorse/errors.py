"""Exception types shared across the package.

The CLI maps these onto exit codes: validation/format problems exit 4,
I/O problems exit 3 (plain OSError), numeric divergence exits 5.
"""


class ArmMorseError(Exception):
    """Base class for all errors raised by this package."""


class TooShortError(ArmMorseError):
    """Sample stream does not cover a full window."""


class NonMonotonicError(ArmMorseError):
    """Timestamps decrease within a stream."""


class DegenerateChannelError(ArmMorseError):
    """A channel has (near-)zero variance where a spread is required."""


class SchemaMismatchError(ArmMorseError):
    """A CSV file does not match the documented column layout."""


class ParseError(ArmMorseError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ShapeMismatchError(ArmMorseError):
    """Tensor shapes are incompatible with the requested operation."""


class ConfigError(ArmMorseError):
    """A configuration value is out of its legal range."""


class DivergenceError(ArmMorseError):
    """Training loss became non-finite; carries the epoch it happened in."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class InsufficientSubjectsError(ArmMorseError):
    """Cross-validation needs more distinct subjects than the dataset has."""


class EmptyBenchmarkError(ArmMorseError):
    """A latency benchmark was requested over zero windows."""


class NoCodeForRandomError(ArmMorseError):
    """The Random class has no Morse code; only intentional gestures do."""


class EmptyCodeError(ArmMorseError):
    """A Morse code with no symbols cannot be rendered."""


class MalformedTimelineError(ArmMorseError):
    """A vibration timeline does not decode back to a Morse code."""


class GatingViolationError(ArmMorseError):
    """begin_transmit was called although the gating rules forbid it."""


class ModelFormatError(ArmMorseError):
    """A model file is corrupt or has an unsupported format version."""
