"""Parameter manifests and model checkpoints.

Parameter file layout (``params.bin``)::

    line 1   JSON header terminated by '\\n':
             {"format": "kaconvtext-params", "version": 1,
              "dtype": "<f8", "records": [{"name", "shape", "offset", "count"}, ...]}
    rest     the float64 little-endian values of every record, concatenated in
             header order; ``offset`` and ``count`` are in elements.

Records appear in the model's ``named_parameters`` order.  A checkpoint is a
directory holding ``VERSION``, ``params.bin``, ``spec.json`` and ``vocab.txt``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, ParseError

FORMAT = "kaconvtext-params"
VERSION = 1
CHECKPOINT_VERSION = "kaconvtext-checkpoint 1"


def save_params(path, named_params) -> None:
    records, blobs, offset = [], [], 0
    for name, tensor in named_params:
        arr = np.ascontiguousarray(tensor.data, dtype="<f8")
        records.append({"name": name, "shape": list(arr.shape), "offset": offset,
                        "count": int(arr.size)})
        blobs.append(arr.tobytes())
        offset += arr.size
    header = {"format": FORMAT, "version": VERSION, "dtype": "<f8", "records": records}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n")
        for blob in blobs:
            fh.write(blob)


def load_params(path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ParseError("missing header line", path=path)
    try:
        header = json.loads(raw[:nl])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad header: {exc}", line=1, path=path) from None
    if header.get("format") != FORMAT:
        raise ParseError(f"not a {FORMAT} file", line=1, path=path)
    if header.get("version") != VERSION:
        raise ParseError(f"unsupported version {header.get('version')}", line=1, path=path)
    values = np.frombuffer(raw[nl + 1:], dtype="<f8")
    out = {}
    for rec in header["records"]:
        start, count = rec["offset"], rec["count"]
        if start + count > values.size:
            raise ParseError(f"record {rec['name']} runs past end of file", path=path)
        out[rec["name"]] = values[start:start + count].reshape(rec["shape"]).astype(np.float64)
    return out


def assign_params(module, arrays: dict) -> None:
    for name, tensor in module.named_parameters():
        if name not in arrays:
            raise InvalidArgument(f"parameter {name} missing from manifest")
        if arrays[name].shape != tensor.shape:
            raise InvalidArgument(
                f"parameter {name}: manifest shape {arrays[name].shape} != {tensor.shape}")
        tensor.data[...] = arrays[name]


def save_checkpoint(directory, model, vocab, extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "VERSION").write_text(CHECKPOINT_VERSION + "\n")
    save_params(directory / "params.bin", model.named_parameters())
    meta = {"spec": model.spec.to_dict(), "seed": model.seed, "extra": extra or {}}
    (directory / "spec.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    vocab.save(directory / "vocab.txt")
    return directory


def load_checkpoint(directory):
    """Returns ``(model, vocab, extra)``."""
    from .embeddings import EmbeddingTable, Vocabulary
    from .models import ModelSpec, TextClassifier

    directory = Path(directory)
    version = (directory / "VERSION").read_text().strip() if (directory / "VERSION").exists() \
        else None
    if version != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version {version!r}", path=directory)
    meta = json.loads((directory / "spec.json").read_text())
    spec = ModelSpec.from_dict(meta["spec"])
    vocab = Vocabulary.load(directory / "vocab.txt")
    arrays = load_params(directory / "params.bin")
    table = EmbeddingTable(arrays["embedding.weight"], mode=spec.embed_mode)
    model = TextClassifier(spec, table, seed=meta["seed"], initialize=False)
    assign_params(model, arrays)
    return model, vocab, meta["extra"]
