"""Exception types shared across the package."""


class AbsaCnnError(Exception):
    """Base class for every error raised by this package."""


class CorpusError(AbsaCnnError):
    """Malformed corpus XML or an invalid sentence record."""


class EmbeddingFormatError(AbsaCnnError):
    """Malformed pre-trained embedding file."""


class ShapeError(AbsaCnnError):
    """Tensor shapes inconsistent with the model layout."""


class TrainingError(AbsaCnnError):
    """Training cannot proceed, e.g. a non-finite gradient."""


class ModelFormatError(AbsaCnnError):
    """A serialized model directory fails validation."""


class NotFittedError(AbsaCnnError):
    """predict/score called on an estimator before fit."""
