"""
Error hierarchy for the DOPING toolkit.

Every error also subclasses the closest builtin so callers that only know
about ValueError / RuntimeError keep working.
"""


class DopingError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(DopingError, ValueError):
    """Array shapes do not line up with a network or model."""


class NonFiniteError(DopingError, FloatingPointError):
    """A NaN or infinity reached a place that requires finite values."""


class TrainingDivergedError(DopingError, RuntimeError):
    """A training loss became non-finite."""

    def __init__(self, phase: str, step: int, loss: float):
        self.phase = phase
        self.step = step
        self.loss = loss
        super().__init__(
            f"Training diverged in {phase} phase at step {step} (loss={loss!r}); "
            f"try a smaller learning rate"
        )


class InvalidLabelsError(DopingError, ValueError):
    """Labels are not binary or do not match the data."""


class ModelFormatError(DopingError, ValueError):
    """A model file could not be read."""


class ModelVersionError(ModelFormatError):
    """A model file was written by an unsupported format version."""


class CorruptModelError(ModelFormatError):
    """A model file is truncated or structurally invalid."""


class EmptyEdgeSetError(DopingError, ValueError):
    """No latent vector falls inside the edge band."""


class PoolTooSmallError(DopingError, ValueError):
    """Nearest-neighbour search has no candidate besides the query."""


class FeatureRangeError(DopingError, ValueError):
    """Features fall outside the range an augmenter supports."""


class MissingModelError(DopingError, ValueError):
    """An augmenter that needs a trained AAE was called without one."""


class CsvFormatError(DopingError, ValueError):
    """A CSV table is ragged, non-numeric or missing a column."""


class DegenerateLabelsError(DopingError, ValueError):
    """A split or evaluation set lacks a class it needs."""


class ConfigError(DopingError, ValueError):
    """A run configuration is invalid."""
