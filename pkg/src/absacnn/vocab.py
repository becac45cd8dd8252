"""Frequency-capped vocabularies and fixed-length index encoding."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1
RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN)


@dataclass(frozen=True)
class Vocabulary:
    """Dense token -> index map with PAD at 0 and UNK at 1."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.tokens[:2] != RESERVED_TOKENS:
            raise ValueError("vocabulary must start with the PAD and UNK tokens")
        object.__setattr__(
            self, "_index", {t: i for i, t in enumerate(self.tokens)}
        )
        if len(self._index) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def lookup(self, token: str) -> int:
        """Index of a token, UNK for out-of-vocabulary ones."""
        return self._index.get(token, UNK_INDEX)

    def token_at(self, index: int) -> str:
        return self.tokens[index]


@dataclass
class EncodedSentence:
    """Index row padded to a fixed length; PAD fills positions >= true_length."""

    indices: np.ndarray
    true_length: int


def build_vocabulary(
    token_lists: Iterable[Sequence[str]],
    max_size: int = 10000,
    extra_tokens: Sequence[str] = (),
) -> Vocabulary:
    """Keep the ``max_size`` most frequent tokens, plus PAD and UNK.

    Ranking is by descending corpus frequency with lexicographic ascending
    tie-break, so construction is reproducible. ``extra_tokens`` are
    appended beyond the cap when absent (used to guarantee aspect tokens a
    row in shared embedding spaces). Corpus tokens colliding with the
    reserved sentinels are skipped.
    """
    if max_size < 1:
        raise ValueError(f"max_size must be >= 1, got {max_size}")
    counts: Counter[str] = Counter()
    for tokens in token_lists:
        counts.update(tokens)
    for reserved in RESERVED_TOKENS:
        counts.pop(reserved, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [token for token, _ in ranked[:max_size]]
    present = set(RESERVED_TOKENS) | set(kept)
    for token in extra_tokens:
        if token not in present:
            kept.append(token)
            present.add(token)
    return Vocabulary(RESERVED_TOKENS + tuple(kept))


def encode(tokens: Sequence[str], vocab: Vocabulary, max_len: int = 100) -> EncodedSentence:
    """Map tokens to a fixed-length index row.

    Out-of-vocabulary tokens map to UNK; sequences longer than ``max_len``
    are truncated on the right, shorter ones padded with PAD at the end.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    ids = [vocab.lookup(t) for t in tokens[:max_len]]
    true_length = len(ids)
    ids.extend([PAD_INDEX] * (max_len - true_length))
    return EncodedSentence(np.asarray(ids, dtype=np.int64), true_length)


def decode(encoded: EncodedSentence, vocab: Vocabulary) -> list[str]:
    """Tokens for the non-PAD positions of an encoded sentence."""
    return [vocab.token_at(int(i)) for i in encoded.indices[: encoded.true_length]]
