"""Embedding matrices: random initialization and pre-trained text loading."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import EmbeddingFormatError
from .vocab import PAD_INDEX, Vocabulary


@dataclass
class EmbeddingMatrix:
    """Dense row-per-token embedding table; the PAD row is pinned to zero."""

    values: np.ndarray
    trainable: bool = True

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def random_init(
    vocab: Vocabulary, dim: int, seed: int, scale: float = 0.25
) -> EmbeddingMatrix:
    """Uniform[-scale, scale] rows from a seeded PRNG, PAD row zeroed.

    The default scale matches the spread of typical pre-trained word
    vectors, keeping randomly initialized rows comparable to loaded ones.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    values = rng.uniform(-scale, scale, size=(len(vocab), dim))
    values[PAD_INDEX] = 0.0
    return EmbeddingMatrix(values)


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return True


def load_pretrained(
    lines: Iterable[str],
    vocab: Vocabulary,
    seed: int,
    scale: float = 0.25,
) -> tuple[EmbeddingMatrix, float]:
    """Load a GloVe-style text stream into an embedding matrix.

    Each line is ``token v1 v2 ... vk`` with a consistent ``k``; an optional
    first line of the form ``<count> <dim>`` is skipped. Rows for vocabulary
    tokens found in the stream are copied; the rest keep the values
    :func:`random_init` would assign for the same seed, so coverage can only
    grow as lines are added. Returns the matrix and the fraction of
    non-reserved vocabulary tokens that were found.

    Raises:
        EmbeddingFormatError: inconsistent dimensionality or a non-numeric
            field, with the offending line number; or an empty stream.
    """
    found: dict[str, np.ndarray] = {}
    dim: int | None = None
    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            continue
        if lineno == 1 and _is_header(fields):
            continue
        token, tail = fields[0], fields[1:]
        if dim is None:
            if not tail:
                raise EmbeddingFormatError(f"line {lineno}: no vector values")
            dim = len(tail)
        elif len(tail) != dim:
            raise EmbeddingFormatError(
                f"line {lineno}: expected {dim} values, got {len(tail)}"
            )
        try:
            vector = np.asarray([float(x) for x in tail])
        except ValueError:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric field") from None
        if not np.isfinite(vector).all():
            raise EmbeddingFormatError(f"line {lineno}: non-finite value")
        if token in vocab:
            index = vocab.lookup(token)
            if index > PAD_INDEX + 1:  # never overwrite the reserved rows
                found[token] = vector
    if dim is None:
        raise EmbeddingFormatError("embedding stream contains no data lines")

    matrix = random_init(vocab, dim, seed, scale)
    for token, vector in found.items():
        matrix.values[vocab.lookup(token)] = vector
    n_real = len(vocab) - 2
    coverage = len(found) / n_real if n_real else 0.0
    return matrix, coverage
