"""Review corpus handling: typed records, XML parsing/writing, tokenization, splits.

The corpus layer is lossless: sentences keep their full token list here and
are only truncated when encoded for the network (see :mod:`absacnn.vocab`).
All types are immutable, so parsed datasets are safe to share across threads.
"""

from __future__ import annotations

import re
import string
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import CorpusError

_LABEL_PART = re.compile(r"[A-Z0-9_]+\Z")

#: Characters detached from word boundaries by the default tokenizer.
PUNCTUATION = set(string.punctuation) | set("…«»¿¡“”‘’–—")


@dataclass(frozen=True)
class AspectLabel:
    """An ENTITY#ATTRIBUTE category label, e.g. LAPTOP#PRICE."""

    entity: str
    attribute: str

    def __post_init__(self):
        for part in (self.entity, self.attribute):
            if not _LABEL_PART.match(part):
                raise ValueError(
                    f"aspect label parts must match [A-Z0-9_]+, got {part!r}"
                )

    @classmethod
    def parse(cls, canonical: str) -> "AspectLabel":
        if canonical.count("#") != 1:
            raise ValueError(
                f"aspect label must contain exactly one '#': {canonical!r}"
            )
        entity, attribute = canonical.split("#")
        return cls(entity, attribute)

    @property
    def canonical(self) -> str:
        return f"{self.entity}#{self.attribute}"

    def __str__(self) -> str:
        return self.canonical


class Polarity(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"

    @classmethod
    def parse(cls, value: str) -> "Polarity":
        try:
            return cls(value)
        except ValueError:
            raise CorpusError(f"unknown polarity {value!r}") from None


@dataclass(frozen=True)
class Opinion:
    """One aspect annotation; polarity is None on aspect-only predictions."""

    category: AspectLabel
    polarity: Polarity | None = None


@dataclass(frozen=True)
class Sentence:
    id: str
    text: str
    tokens: tuple[str, ...]
    opinions: tuple[Opinion, ...] = ()

    def aspect_set(self) -> set[AspectLabel]:
        return {op.category for op in self.opinions}


@dataclass(frozen=True)
class Dataset:
    sentences: tuple[Sentence, ...]
    language: str = ""
    domain: str = ""

    def __post_init__(self):
        seen = set()
        for s in self.sentences:
            if s.id in seen:
                raise CorpusError(f"duplicate sentence id {s.id!r}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace, detaching boundary punctuation.

    Leading and trailing punctuation characters become tokens of their own;
    interior punctuation (hyphens, apostrophes) is left attached.
    Idempotent on its own space-joined output.
    """
    tokens: list[str] = []
    for chunk in text.lower().split():
        head: list[str] = []
        tail: list[str] = []
        while chunk and chunk[0] in PUNCTUATION:
            head.append(chunk[0])
            chunk = chunk[1:]
        while chunk and chunk[-1] in PUNCTUATION:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(head)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(tail))
    return tokens


def whitespace_tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace only; for pre-segmented input."""
    return text.lower().split()


def mmseg_tokenize(text: str) -> list[str]:
    raise NotImplementedError(
        "Chinese mmseg segmentation is not bundled; pre-segment the corpus "
        "and use the 'whitespace' tokenizer instead"
    )


TOKENIZERS: dict[str, Callable[[str], list[str]]] = {
    "default": tokenize,
    "whitespace": whitespace_tokenize,
    "mmseg": mmseg_tokenize,
}


def get_tokenizer(name: str) -> Callable[[str], list[str]]:
    try:
        return TOKENIZERS[name]
    except KeyError:
        raise ValueError(
            f"unknown tokenizer {name!r}; available: {sorted(TOKENIZERS)}"
        ) from None


def parse_semeval_xml(
    data: bytes | str,
    language: str = "",
    domain: str = "",
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> Dataset:
    """Parse a SemEval-style ABSA document into a :class:`Dataset`.

    Accepts documents rooted at ``<sentences>``, at a single ``<sentence>``,
    or with sentences nested deeper (``<Reviews>`` files). Opinions keep
    document order; a sentence without an ``<Opinions>`` element gets an
    empty opinion list.

    Raises:
        CorpusError: malformed XML (with line/column context), a sentence
            missing its ``<text>`` or ``id``, a bad category, or an unknown
            polarity string.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise CorpusError(f"malformed XML at line {line}, column {col}: {exc.msg}") from exc

    if not language:
        language = root.get("language", "")
    if not domain:
        domain = root.get("domain", "")

    sentences = []
    for elem in root.iter("sentence"):
        sid = elem.get("id")
        if sid is None:
            raise CorpusError("sentence element without an 'id' attribute")
        text_elem = elem.find("text")
        if text_elem is None:
            raise CorpusError(f"sentence {sid!r}: missing <text> element")
        text = text_elem.text or ""

        opinions = []
        opinions_elem = elem.find("Opinions")
        if opinions_elem is not None:
            for op_elem in opinions_elem.findall("Opinion"):
                category = op_elem.get("category")
                if category is None:
                    raise CorpusError(f"sentence {sid!r}: Opinion without category")
                try:
                    label = AspectLabel.parse(category)
                except ValueError as exc:
                    raise CorpusError(f"sentence {sid!r}: {exc}") from exc
                polarity_attr = op_elem.get("polarity")
                polarity = None
                if polarity_attr is not None:
                    try:
                        polarity = Polarity.parse(polarity_attr)
                    except CorpusError as exc:
                        raise CorpusError(f"sentence {sid!r}: {exc}") from exc
                opinions.append(Opinion(label, polarity))

        sentences.append(
            Sentence(id=sid, text=text, tokens=tuple(tokenizer(text)), opinions=tuple(opinions))
        )

    return Dataset(tuple(sentences), language=language, domain=domain)


def write_semeval_xml(dataset: Dataset) -> bytes:
    """Serialize a dataset back to the corpus XML schema (UTF-8).

    Inverse of :func:`parse_semeval_xml` up to whitespace: reparsing the
    output yields an equal Dataset. Opinions with ``polarity=None`` are
    written without a polarity attribute.
    """
    root = ET.Element("sentences")
    if dataset.language:
        root.set("language", dataset.language)
    if dataset.domain:
        root.set("domain", dataset.domain)
    for sentence in dataset:
        s_elem = ET.SubElement(root, "sentence", id=sentence.id)
        text_elem = ET.SubElement(s_elem, "text")
        text_elem.text = sentence.text
        if sentence.opinions:
            ops_elem = ET.SubElement(s_elem, "Opinions")
            for op in sentence.opinions:
                attrs = {"category": op.category.canonical}
                if op.polarity is not None:
                    attrs["polarity"] = op.polarity.value
                ET.SubElement(ops_elem, "Opinion", attrs)
    tree = ET.ElementTree(root)
    ET.indent(tree)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def split_train_validation(
    dataset: Dataset, fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic train/validation partition of a dataset.

    The validation part receives ``round(fraction * N)`` sentences sampled
    without replacement by a PRNG seeded with ``seed``; both parts keep the
    original sentence order. Same inputs and seed always give the same split.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    n_valid = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(n, size=n_valid, replace=False).tolist())
    train = tuple(s for i, s in enumerate(dataset) if i not in chosen)
    valid = tuple(s for i, s in enumerate(dataset) if i in chosen)
    return (
        Dataset(train, language=dataset.language, domain=dataset.domain),
        Dataset(valid, language=dataset.language, domain=dataset.domain),
    )
