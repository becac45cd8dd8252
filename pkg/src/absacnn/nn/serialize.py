"""Model directory serialization: JSON manifest plus raw float32 arrays.

A model directory holds ``manifest`` (shapes, hyperparameters, vocabulary,
task metadata, format version) and ``params.bin`` (little-endian IEEE-754
32-bit floats, arrays concatenated in manifest order, row-major). Training
runs in float64; saving casts to float32, so one save/load round trip
canonicalizes parameters and further round trips are exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..embeddings import EmbeddingMatrix
from ..errors import ModelFormatError
from .model import TextCnn
from .ops import FilterBank

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest"
PARAMS_NAME = "params.bin"


def save_model(path: str | Path, model: TextCnn, metadata: dict) -> None:
    """Write a model directory; ``metadata`` lands in the manifest verbatim."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    arrays = model.all_arrays()
    manifest = dict(metadata)
    manifest["format_version"] = FORMAT_VERSION
    manifest["pooling"] = model.pooling
    manifest["aspect_mode"] = model.aspect_mode
    manifest["filter_widths"] = [b.width for b in model.banks]
    manifest["filters_per_width"] = model.banks[0].count if model.banks else 0
    manifest["word_emb_trainable"] = model.word_embeddings.trainable
    manifest["aspect_emb_trainable"] = (
        model.aspect_embeddings.trainable if model.aspect_embeddings else None
    )
    manifest["arrays"] = [
        {"name": name, "shape": list(array.shape)} for name, array in arrays
    ]
    with open(path / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(path / PARAMS_NAME, "wb") as fh:
        for _, array in arrays:
            fh.write(np.ascontiguousarray(array, dtype="<f4").tobytes())


def read_manifest(path: str | Path) -> dict:
    try:
        with open(Path(path) / MANIFEST_NAME, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ModelFormatError(f"{path}: missing {MANIFEST_NAME}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid manifest: {exc}") from None


def write_manifest(path: str | Path, manifest: dict) -> None:
    with open(Path(path) / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> tuple[TextCnn, dict]:
    """Reconstruct a model from a directory, validating the byte payload."""
    path = Path(path)
    manifest = read_manifest(path)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {manifest.get('format_version')!r}"
        )
    entries = manifest.get("arrays")
    if not entries:
        raise ModelFormatError(f"{path}: manifest declares no arrays")
    expected = sum(int(np.prod(e["shape"])) for e in entries) * 4
    blob = (path / PARAMS_NAME).read_bytes()
    if len(blob) != expected:
        raise ModelFormatError(
            f"{path}: {PARAMS_NAME} holds {len(blob)} bytes, manifest declares {expected}"
        )
    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for entry in entries:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        arrays[entry["name"]] = flat.astype(np.float64).reshape(shape)
        offset += count * 4

    widths = manifest["filter_widths"]
    required = {"word_emb", "out_weights", "out_bias"}
    required |= {f"bank{h}_{part}" for h in widths for part in ("weights", "bias")}
    missing = required - arrays.keys()
    if missing:
        raise ModelFormatError(f"{path}: manifest missing arrays {sorted(missing)}")

    word_emb = EmbeddingMatrix(
        arrays["word_emb"], manifest.get("word_emb_trainable", True)
    )
    aspect_emb = None
    if "aspect_emb" in arrays:
        aspect_emb = EmbeddingMatrix(
            arrays["aspect_emb"], manifest.get("aspect_emb_trainable", True)
        )
    banks = [
        FilterBank(h, arrays[f"bank{h}_weights"], arrays[f"bank{h}_bias"])
        for h in widths
    ]
    model = TextCnn(
        word_emb,
        banks,
        arrays["out_weights"],
        arrays["out_bias"],
        aspect_mode=manifest.get("aspect_mode"),
        aspect_embeddings=aspect_emb,
        pooling=manifest.get("pooling", "max"),
    )
    return model, manifest
