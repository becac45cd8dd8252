"""Command-line surface tying the pipeline together.

Subcommands: train-aspect, train-sentiment, predict-aspect,
predict-polarity, evaluate-aspect, evaluate-polarity, tune-threshold,
inspect-inventory, gradient-check. All randomness is controlled by the
seed, so identical invocations produce identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aspects import AspectDetector, build_inventory, select_threshold_from_probs
from .config import ExperimentConfig
from .corpus import Dataset, Opinion, Sentence, parse_semeval_xml, write_semeval_xml
from .errors import AbsaCnnError
from .metrics import accuracy, micro_f1
from .nn.gradcheck import demo_model, gradient_check
from .nn.serialize import read_manifest, write_manifest
from .sentiment import SentimentClassifier

GRADIENT_TOLERANCE = 1e-4


def _read_dataset(path: str, language: str = "", domain: str = "") -> Dataset:
    return parse_semeval_xml(Path(path).read_bytes(), language=language, domain=domain)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = (
        ExperimentConfig.from_file(args.config)
        if args.config
        else ExperimentConfig()
    )
    overrides = {
        name: getattr(args, name)
        for name in (
            "language",
            "domain",
            "seed",
            "epochs",
            "batch_size",
            "max_len",
            "embedding_dim",
            "num_filters",
            "dropout",
            "vocab_size",
            "validation_fraction",
            "patience",
            "pretrained",
            "use_avg_pooling",
            "min_count",
            "threshold",
            "aspect_space",
            "aspect_dim",
        )
        if hasattr(args, name)
    }
    return config.override(**overrides)


def _add_training_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--train", required=True, help="training corpus XML")
    parser.add_argument("--valid", help="validation corpus XML (default: split off)")
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--out", required=True, help="model output directory")
    parser.add_argument("--language")
    parser.add_argument("--domain")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--max-len", type=int, dest="max_len")
    parser.add_argument("--embedding-dim", type=int, dest="embedding_dim")
    parser.add_argument("--num-filters", type=int, dest="num_filters")
    parser.add_argument("--dropout", type=float)
    parser.add_argument("--vocab-size", type=int, dest="vocab_size")
    parser.add_argument(
        "--validation-fraction", type=float, dest="validation_fraction"
    )
    parser.add_argument("--patience", type=int)
    parser.add_argument(
        "--embeddings", dest="pretrained", help="pre-trained embedding text file"
    )
    parser.add_argument(
        "--avg-pooling",
        action="store_const",
        const=True,
        dest="use_avg_pooling",
        help="also average-pool each feature map",
    )


def _write_history(out_dir: str, history: list[dict]) -> None:
    with open(Path(out_dir) / "history.jsonl", "w", encoding="utf-8") as fh:
        for record in history:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _cmd_train_aspect(args: argparse.Namespace) -> int:
    config = _load_config(args)
    train = _read_dataset(args.train, config.language, config.domain)
    valid = _read_dataset(args.valid, config.language, config.domain) if args.valid else None
    detector = AspectDetector(**config.aspect_params())
    detector.fit(train, valid)
    detector.save(args.out)
    _write_history(args.out, detector.history_)
    best = max((h.get("valid_f1", 0.0) for h in detector.history_), default=0.0)
    _emit(
        {
            "command": "train-aspect",
            "model": args.out,
            "threshold": detector.threshold_,
            "classes": detector.inventory_.num_classes,
            "epochs_trained": len(detector.history_),
            "best_valid_f1": best,
            "embedding_coverage": detector.coverage_,
        }
    )
    return 0


def _cmd_train_sentiment(args: argparse.Namespace) -> int:
    config = _load_config(args)
    train = _read_dataset(args.train, config.language, config.domain)
    valid = _read_dataset(args.valid, config.language, config.domain) if args.valid else None
    classifier = SentimentClassifier(**config.sentiment_params())
    classifier.fit(train, valid)
    classifier.save(args.out)
    _write_history(args.out, classifier.history_)
    best = max(
        (h.get("valid_accuracy", 0.0) for h in classifier.history_), default=0.0
    )
    _emit(
        {
            "command": "train-sentiment",
            "model": args.out,
            "epochs_trained": len(classifier.history_),
            "best_valid_accuracy": best,
            "embedding_coverage": classifier.coverage_,
        }
    )
    return 0


def _cmd_predict_aspect(args: argparse.Namespace) -> int:
    detector = AspectDetector.load(args.model)
    data = _read_dataset(args.input)
    predicted = detector.predict(data)
    sentences = [
        Sentence(
            id=s.id,
            text=s.text,
            tokens=s.tokens,
            opinions=tuple(
                Opinion(label)
                for label in sorted(aspects, key=lambda a: a.canonical)
            ),
        )
        for s, aspects in zip(data, predicted)
    ]
    out = Dataset(tuple(sentences), language=data.language, domain=data.domain)
    Path(args.out).write_bytes(write_semeval_xml(out))
    _emit(
        {
            "command": "predict-aspect",
            "output": args.out,
            "sentences": len(out),
            "opinions": sum(len(s.opinions) for s in out),
        }
    )
    return 0


def _cmd_predict_polarity(args: argparse.Namespace) -> int:
    classifier = SentimentClassifier.load(args.model)
    data = _read_dataset(args.input)
    if args.aspect_model:
        detector = AspectDetector.load(args.aspect_model)
        predicted = detector.predict(data)
        data = Dataset(
            tuple(
                Sentence(
                    id=s.id,
                    text=s.text,
                    tokens=s.tokens,
                    opinions=tuple(
                        Opinion(label)
                        for label in sorted(aspects, key=lambda a: a.canonical)
                    ),
                )
                for s, aspects in zip(data, predicted)
            ),
            language=data.language,
            domain=data.domain,
        )
    polarities = classifier.predict(data)
    cursor = 0
    sentences = []
    for sentence in data:
        opinions = []
        for opinion in sentence.opinions:
            opinions.append(Opinion(opinion.category, polarities[cursor]))
            cursor += 1
        sentences.append(
            Sentence(
                id=sentence.id,
                text=sentence.text,
                tokens=sentence.tokens,
                opinions=tuple(opinions),
            )
        )
    out = Dataset(tuple(sentences), language=data.language, domain=data.domain)
    Path(args.out).write_bytes(write_semeval_xml(out))
    _emit(
        {
            "command": "predict-polarity",
            "output": args.out,
            "pairs": cursor,
            "pipeline": bool(args.aspect_model),
        }
    )
    return 0


def _cmd_evaluate_aspect(args: argparse.Namespace) -> int:
    detector = AspectDetector.load(args.model)
    data = _read_dataset(args.test)
    gold = [s.aspect_set() for s in data]
    score = micro_f1(gold, detector.predict(data))
    _emit(score.to_dict() | {"command": "evaluate-aspect", "sentences": len(data)})
    return 0


def _cmd_evaluate_polarity(args: argparse.Namespace) -> int:
    classifier = SentimentClassifier.load(args.model)
    data = _read_dataset(args.test)
    if args.pipeline:
        if not args.aspect_model:
            raise ValueError("--pipeline requires --aspect-model")
        detector = AspectDetector.load(args.aspect_model)
        predicted_sets = detector.predict(data)
        gold, pairs = [], []
        for sentence, aspects in zip(data, predicted_sets):
            by_label = {
                op.category: op.polarity
                for op in sentence.opinions
                if op.polarity is not None
            }
            for label in sorted(aspects, key=lambda a: a.canonical):
                if label in by_label:  # only gold-matched pairs are scorable
                    gold.append(by_label[label])
                    pairs.append((sentence, label))
        protocol = "pipeline"
    else:
        gold, pairs = [], []
        for sentence in data:
            for opinion in sentence.opinions:
                if opinion.polarity is not None:
                    gold.append(opinion.polarity)
                    pairs.append((sentence, opinion.category))
        protocol = "gold-aspects"
    if not pairs:
        raise ValueError("no scorable (sentence, aspect) pairs in the test set")
    pred = classifier.predict(pairs)
    score = accuracy(gold, pred)
    _emit(
        score.to_dict()
        | {"command": "evaluate-polarity", "protocol": protocol}
    )
    return 0


def _cmd_tune_threshold(args: argparse.Namespace) -> int:
    detector = AspectDetector.load(args.model)
    valid = _read_dataset(args.valid)
    if len(valid) == 0:
        raise ValueError("validation set is empty")
    probs = detector.predict_proba(valid)
    gold = [s.aspect_set() for s in valid]
    tau, f1 = select_threshold_from_probs(probs, gold, detector.inventory_)
    if args.update:
        manifest = read_manifest(args.model)
        manifest["threshold"] = tau
        write_manifest(args.model, manifest)
    _emit(
        {
            "command": "tune-threshold",
            "threshold": tau,
            "f1": f1,
            "updated": bool(args.update),
        }
    )
    return 0


def _cmd_inspect_inventory(args: argparse.Namespace) -> int:
    data = _read_dataset(args.train)
    inventory = build_inventory(data, args.min_count)
    _emit(inventory.to_dict() | {"command": "inspect-inventory"})
    return 0


def _cmd_gradient_check(args: argparse.Namespace) -> int:
    model, sentence, target, aspect_ids = demo_model(args.task, seed=args.seed)
    error = gradient_check(
        model, sentence, target, aspect_ids, epsilon=args.epsilon
    )
    ok = error < GRADIENT_TOLERANCE
    _emit(
        {
            "command": "gradient-check",
            "task": args.task,
            "max_relative_error": error,
            "epsilon": args.epsilon,
            "tolerance": GRADIENT_TOLERANCE,
            "ok": ok,
        }
    )
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="absacnn",
        description="CNN-based multilingual aspect-based sentiment analysis",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("train-aspect", help="train an aspect category detector")
    _add_training_flags(p)
    p.add_argument("--min-count", type=int, dest="min_count")
    p.add_argument(
        "--threshold",
        type=float,
        help="fix the decision threshold instead of tuning it",
    )
    p.set_defaults(func=_cmd_train_aspect)

    p = sub.add_parser("train-sentiment", help="train a polarity classifier")
    _add_training_flags(p)
    p.add_argument(
        "--aspect-space", choices=("shared", "separate"), dest="aspect_space"
    )
    p.add_argument("--aspect-dim", type=int, dest="aspect_dim")
    p.set_defaults(func=_cmd_train_sentiment)

    p = sub.add_parser("predict-aspect", help="write predicted aspects as XML")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict_aspect)

    p = sub.add_parser(
        "predict-polarity", help="fill polarity attributes on opinions"
    )
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--aspect-model", help="predict aspects first instead of using the input's"
    )
    p.set_defaults(func=_cmd_predict_polarity)

    p = sub.add_parser("evaluate-aspect", help="micro-F1 against a gold corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=_cmd_evaluate_aspect)

    p = sub.add_parser("evaluate-polarity", help="accuracy against a gold corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument(
        "--pipeline",
        action="store_true",
        help="score on predicted aspects (requires --aspect-model)",
    )
    p.add_argument("--aspect-model")
    p.set_defaults(func=_cmd_evaluate_polarity)

    p = sub.add_parser("tune-threshold", help="re-tune the aspect threshold")
    p.add_argument("--model", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--update", action="store_true", help="write it into the manifest")
    p.set_defaults(func=_cmd_tune_threshold)

    p = sub.add_parser("inspect-inventory", help="dump the OTHER/NONE inventory")
    p.add_argument("--train", required=True)
    p.add_argument("--min-count", type=int, dest="min_count", default=5)
    p.set_defaults(func=_cmd_inspect_inventory)

    p = sub.add_parser("gradient-check", help="verify backprop on a toy model")
    p.add_argument("--task", choices=("aspect", "sentiment"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradient_check)

    return parser


def run_command(argv: list[str]) -> int:
    """Execute one CLI invocation; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (AbsaCnnError, NotImplementedError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
