"""Run configuration, mini-batch training and evaluation."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..autodiff import Adam, backward, no_grad
from ..autodiff import functional as F
from ..embeddings import PAD_INDEX, Vocabulary, build_vocab, init_random, load_pretrained
from ..errors import InvalidArgument, NumericFailure
from ..models import ModelSpec, TextClassifier, build, count_params, normalize_variant
from ..rng import make_rng
from .data import Dataset
from .export import export_splines
from .metrics import MetricsReport, classification_report

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
TIMING_KEYS = ("timings",)


@dataclass
class RunConfig:
    """Everything that determines a training run (together with the data)."""

    task: str = "task"
    model: str = "kaconvtext-mlp"
    embed: str = "random"
    vectors: str | None = None
    vector_algorithm: str | None = None   # "cbow" / "skipgram": provenance of the vector file
    dim: int = 300
    epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-3
    weight_decay: float = 0.0
    seed: int = 42
    ratio: float = 0.8
    max_len: int | None = None
    dropout: float = 0.3
    grid_size: int = 5
    spline_order: int = 3
    grid_range: tuple = (-1.0, 1.0)
    grid_eps: float = 0.02
    scale_noise: float = 0.1
    scale_base: float = 1.0
    scale_spline: float = 1.0
    channels: tuple = (64, 128, 256)
    kernel_sizes: tuple = (3, 4, 5)
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    groups: int = 1

    def __post_init__(self):
        self.model = normalize_variant(self.model)
        self.grid_range = tuple(float(v) for v in self.grid_range)
        self.channels = tuple(int(v) for v in self.channels)
        self.kernel_sizes = tuple(int(v) for v in self.kernel_sizes)
        if self.embed not in ("random", "static", "finetuned"):
            raise InvalidArgument(f"embed must be random, static or finetuned, got {self.embed!r}")
        if self.embed == "random" and self.vectors:
            raise InvalidArgument("--embed random conflicts with --vectors")
        if self.embed != "random" and not self.vectors:
            raise InvalidArgument(f"--embed {self.embed} needs --vectors")
        if self.epochs < 0 or self.batch_size < 1 or self.lr <= 0:
            raise InvalidArgument("epochs must be >= 0, batch_size >= 1 and lr > 0")
        if self.max_len is not None and self.max_len < 1:
            raise InvalidArgument("max_len must be positive")

    def model_spec(self, n_classes: int) -> ModelSpec:
        return ModelSpec(
            variant=self.model, embed_dim=self.dim, n_classes=n_classes,
            channels=self.channels, kernel_sizes=self.kernel_sizes, dropout_p=self.dropout,
            grid_size=self.grid_size, spline_order=self.spline_order,
            grid_range=self.grid_range, grid_eps=self.grid_eps, scale_noise=self.scale_noise,
            scale_base=self.scale_base, scale_spline=self.scale_spline, stride=self.stride,
            padding=self.padding, dilation=self.dilation, groups=self.groups,
            embed_mode=self.embed)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("grid_range", "channels", "kernel_sizes"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgument(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


def pad_batch(sequences, min_length: int, max_len: int | None = None) -> np.ndarray:
    """Right-pad with PAD to the batch maximum (at least ``min_length``),
    truncating to ``max_len`` first when given."""
    if max_len is not None:
        sequences = [s[:max_len] for s in sequences]
    width = max(min_length, max(len(s) for s in sequences))
    out = np.full((len(sequences), width), PAD_INDEX, dtype=np.int64)
    for i, s in enumerate(sequences):
        out[i, :len(s)] = s
    return out


def encode_dataset(ds: Dataset, vocab: Vocabulary, labels: list) -> tuple[list, np.ndarray]:
    index = {label: i for i, label in enumerate(labels)}
    unseen = sorted({r.label for r in ds.records} - set(index))
    if unseen:
        raise InvalidArgument(f"labels not seen in training: {', '.join(unseen)}")
    seqs = [vocab.encode(r.text) for r in ds.records]
    ys = np.array([index[r.label] for r in ds.records], dtype=np.int64)
    return seqs, ys


@dataclass
class RunManifest:
    config: dict
    seed: int
    vocab_size: int
    labels: list
    epoch_losses: list = field(default_factory=list)
    metrics: dict | None = None
    params: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    embedding_meta: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        d = {"version": MANIFEST_VERSION, **asdict(self)}
        if not include_timings:
            d.pop("timings")
        return d

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8")


def _make_embedding(config: RunConfig, vocab: Vocabulary):
    if config.embed == "random":
        return init_random(vocab, config.dim, config.seed)
    return load_pretrained(config.vectors, vocab, dim=config.dim, mode=config.embed,
                           seed=config.seed)


def predict(model: TextClassifier, seqs, batch_size: int = 64,
            max_len: int | None = None) -> np.ndarray:
    preds = []
    with no_grad():
        for start in range(0, len(seqs), batch_size):
            batch = pad_batch(seqs[start:start + batch_size], model.spec.min_length, max_len)
            preds.append(np.argmax(model(batch, train=False).data, axis=1))
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)


def evaluate(model: TextClassifier, vocab: Vocabulary, ds: Dataset, labels: list,
             batch_size: int = 64, max_len: int | None = None) -> MetricsReport:
    """Predict every record of ``ds`` and score against its labels."""
    seqs, ys = encode_dataset(ds, vocab, labels)
    return classification_report(ys, predict(model, seqs, batch_size, max_len), labels)


def train(config: RunConfig, train_set: Dataset, eval_set: Dataset | None = None,
          export_dir=None):
    """Train one model; returns ``(model, vocab, manifest)``.

    Every epoch shuffles the training records with the seeded ``shuffle``
    stream, steps Adam on mean cross-entropy per batch, records the mean
    batch loss and, when ``export_dir`` is set and the trunk is spline
    based, writes ``splines_epoch{n}.csv`` there.  Metrics on ``eval_set``
    are taken after the final epoch.
    """
    if len(train_set) == 0:
        raise InvalidArgument("training set is empty")
    if eval_set is not None and len(eval_set) == 0:
        raise InvalidArgument("evaluation set is empty")
    t0 = time.perf_counter()
    labels = list(train_set.labels)
    vocab = build_vocab(train_set.texts())
    embedding = _make_embedding(config, vocab)
    spec = config.model_spec(len(labels))
    model = build(spec, len(vocab), seed=config.seed, embedding=embedding)
    seqs, ys = encode_dataset(train_set, vocab, labels)
    opt = Adam(model.trainable_parameters(), lr=config.lr, weight_decay=config.weight_decay)
    shuffle_rng = make_rng(config.seed, "shuffle")
    manifest = RunManifest(
        config=config.to_dict(), seed=config.seed, vocab_size=len(vocab), labels=labels,
        params=count_params(model).to_dict(),
        embedding_meta={"mode": config.embed, "vectors": config.vectors,
                        "algorithm": config.vector_algorithm, "dim": config.dim})
    if export_dir is not None and spec.spline_trunk:
        Path(export_dir).mkdir(parents=True, exist_ok=True)
    epoch_times = []
    for epoch in range(1, config.epochs + 1):
        te = time.perf_counter()
        order = shuffle_rng.permutation(len(seqs))
        total, batches = 0.0, 0
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            idx = order[start:start + config.batch_size]
            tokens = pad_batch([seqs[i] for i in idx], spec.min_length, config.max_len)
            try:
                # overflow surfaces as NumericFailure from the op that produced it
                with np.errstate(over="ignore", invalid="ignore"):
                    loss = F.softmax_cross_entropy(model(tokens, train=True), ys[idx])
                    backward(loss)
            except NumericFailure as exc:
                raise NumericFailure(f"epoch {epoch}, batch {b}: {exc}") from exc
            opt.step()
            total += loss.item()
            batches += 1
        manifest.epoch_losses.append(total / batches)
        epoch_times.append(time.perf_counter() - te)
        log.info("epoch %d/%d loss %.6f", epoch, config.epochs, manifest.epoch_losses[-1])
        if export_dir is not None and spec.spline_trunk:
            export_splines(model, epoch, Path(export_dir) / f"splines_epoch{epoch}.csv")
    manifest.timings["train_seconds"] = time.perf_counter() - t0
    manifest.timings["epoch_seconds"] = epoch_times
    if eval_set is not None:
        te = time.perf_counter()
        manifest.metrics = evaluate(model, vocab, eval_set, labels, config.batch_size,
                                    config.max_len).to_dict()
        manifest.timings["eval_seconds"] = time.perf_counter() - te
    return model, vocab, manifest
