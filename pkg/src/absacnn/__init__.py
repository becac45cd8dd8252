"""CNN-based multilingual aspect-based sentiment analysis.

Aspect category detection is thresholded multi-label classification over a
text CNN; sentiment polarity concatenates an averaged aspect vector onto
every word embedding before convolution. Training, threshold tuning,
prediction and evaluation are available programmatically through the two
estimators and from the ``absacnn`` command line.
"""

from .aspects import (
    AspectDetector,
    AspectInventory,
    build_inventory,
    make_target,
    predict_aspects,
    select_threshold,
    train_aspect_model,
)
from .config import ExperimentConfig
from .corpus import (
    AspectLabel,
    Dataset,
    Opinion,
    Polarity,
    Sentence,
    get_tokenizer,
    parse_semeval_xml,
    split_train_validation,
    tokenize,
    write_semeval_xml,
)
from .embeddings import EmbeddingMatrix, load_pretrained, random_init
from .errors import (
    AbsaCnnError,
    CorpusError,
    EmbeddingFormatError,
    ModelFormatError,
    NotFittedError,
    ShapeError,
    TrainingError,
)
from .metrics import Slot1Score, Slot3Score, accuracy, micro_f1
from .sentiment import (
    AspectTokenSpace,
    SentimentClassifier,
    aspect_tokens,
    aspect_vector,
    build_input,
    predict_polarity,
    train_sentiment_model,
)
from .vocab import EncodedSentence, Vocabulary, build_vocabulary, decode, encode

__version__ = "0.1.0"

__all__ = [
    "AbsaCnnError",
    "AspectDetector",
    "AspectInventory",
    "AspectLabel",
    "AspectTokenSpace",
    "CorpusError",
    "Dataset",
    "EmbeddingFormatError",
    "EmbeddingMatrix",
    "EncodedSentence",
    "ExperimentConfig",
    "ModelFormatError",
    "NotFittedError",
    "Opinion",
    "Polarity",
    "Sentence",
    "ShapeError",
    "Slot1Score",
    "Slot3Score",
    "TrainingError",
    "Vocabulary",
    "accuracy",
    "aspect_tokens",
    "aspect_vector",
    "build_input",
    "build_inventory",
    "build_vocabulary",
    "decode",
    "encode",
    "get_tokenizer",
    "load_pretrained",
    "make_target",
    "micro_f1",
    "parse_semeval_xml",
    "predict_aspects",
    "predict_polarity",
    "random_init",
    "select_threshold",
    "split_train_validation",
    "tokenize",
    "train_aspect_model",
    "train_sentiment_model",
    "write_semeval_xml",
]
