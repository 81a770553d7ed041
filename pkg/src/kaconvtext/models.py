"""The four text classifiers and exact trainable-parameter accounting."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Tensor
from .autodiff import functional as F
from .embeddings import PAD_INDEX, EmbeddingTable, init_random
from .errors import InvalidArgument, InvalidState
from .layers import Conv1d, KAConv1d, KANLayer, MLPHead, Module
from .rng import make_rng
from .spline import SplineGrid

VARIANTS = ("cnn", "cnn-kan", "kaconvtext-mlp", "kaconvtext-kan")
_ALIASES = {
    "CNN": "cnn",
    "CNN-KAN": "cnn-kan",
    "KAConvText-MLP": "kaconvtext-mlp",
    "KAConvText-KAN": "kaconvtext-kan",
}
DISPLAY_NAMES = {v: k for k, v in _ALIASES.items()}


def normalize_variant(name: str) -> str:
    key = _ALIASES.get(name, name.lower())
    if key not in VARIANTS:
        raise InvalidArgument(f"unknown model variant {name!r}; choose from {VARIANTS}")
    return key


@dataclass
class ModelSpec:
    variant: str = "kaconvtext-mlp"
    embed_dim: int = 300
    n_classes: int = 2
    channels: tuple = (64, 128, 256)
    kernel_sizes: tuple = (3, 4, 5)
    dropout_p: float = 0.3
    grid_size: int = 5
    spline_order: int = 3
    grid_range: tuple = (-1.0, 1.0)
    grid_eps: float = 0.02
    scale_noise: float = 0.1
    scale_base: float = 1.0
    scale_spline: float = 1.0
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    groups: int = 1
    embed_mode: str = "finetuned"

    def __post_init__(self):
        self.variant = normalize_variant(self.variant)
        self.channels = tuple(int(c) for c in self.channels)
        self.kernel_sizes = tuple(int(k) for k in self.kernel_sizes)
        self.grid_range = tuple(float(v) for v in self.grid_range)
        if len(self.channels) != 3 or len(self.kernel_sizes) != 3:
            raise InvalidArgument("channels and kernel_sizes must each hold three entries")
        if min(self.channels) < 1 or min(self.kernel_sizes) < 1:
            raise InvalidArgument("channels and kernel sizes must be positive")
        if not 0.0 <= self.dropout_p < 1.0:
            raise InvalidArgument(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if self.embed_dim < 1 or self.n_classes < 1:
            raise InvalidArgument("embed_dim and n_classes must be positive")
        if self.embed_mode not in ("random", "static", "finetuned"):
            raise InvalidArgument(f"unknown embedding mode {self.embed_mode!r}")
        self.grid()  # validates grid hyperparameters

    @property
    def spline_trunk(self) -> bool:
        return self.variant.startswith("kaconvtext")

    @property
    def kan_head(self) -> bool:
        return self.variant.endswith("kan")

    @property
    def min_length(self) -> int:
        """Shortest padded sequence the trunk accepts: sum(k - 1) + 3."""
        return sum(k - 1 for k in self.kernel_sizes) + 3

    def grid(self) -> SplineGrid:
        return SplineGrid(self.grid_size, self.spline_order, self.grid_range[0],
                          self.grid_range[1], self.grid_eps)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channels"] = list(self.channels)
        d["kernel_sizes"] = list(self.kernel_sizes)
        d["grid_range"] = list(self.grid_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


class TextClassifier(Module):
    """embedding -> three (KA)conv layers -> average pool -> dropout -> head."""

    _child_names = ("embedding", "features", "head")

    def __init__(self, spec: ModelSpec, embedding: EmbeddingTable, seed: int = 0,
                 initialize: bool = True):
        if embedding.dim != spec.embed_dim:
            raise InvalidArgument(
                f"embedding dim {embedding.dim} does not match spec embed_dim {spec.embed_dim}")
        self.spec = spec
        self.seed = seed
        self.embedding = embedding
        rng = make_rng(seed, "init") if initialize else None
        grid = spec.grid()
        conv = dict(stride=spec.stride, padding=spec.padding, dilation=spec.dilation,
                    groups=spec.groups)
        widths = (spec.embed_dim,) + spec.channels
        self.features = []
        for c_in, c_out, k in zip(widths[:-1], widths[1:], spec.kernel_sizes):
            if spec.spline_trunk:
                layer = KAConv1d(c_in, c_out, k, grid=grid, scale_noise=spec.scale_noise,
                                 scale_base=spec.scale_base, rng=rng, **conv)
            else:
                layer = Conv1d(c_in, c_out, k, rng=rng, **conv)
            self.features.append(layer)
        n_feat = spec.channels[-1]
        if spec.kan_head:
            self.head = KANLayer(n_feat, spec.n_classes, grid=grid, scale_noise=spec.scale_noise,
                                 scale_base=spec.scale_base, scale_spline=spec.scale_spline,
                                 rng=rng)
        else:
            self.head = MLPHead(n_feat, spec.n_classes, rng=rng)
        self._dropout_rng = make_rng(seed, "dropout")

    def reseed_dropout(self, seed: int):
        self._dropout_rng = make_rng(seed, "dropout")

    def features_forward(self, tokens, train: bool = False) -> Tensor:
        """Pooled trunk features, shape [B, channels[-1]]."""
        tokens = np.asarray(tokens)
        if tokens.ndim == 1:
            tokens = tokens[None]
        if tokens.shape[1] < self.spec.min_length:
            raise InvalidState(
                f"sequence length {tokens.shape[1]} is below the minimum padded length "
                f"{self.spec.min_length}; pad before calling forward")
        x = F.embedding_lookup(self.embedding.weight, tokens, padding_idx=PAD_INDEX)
        x = F.transpose(x, (0, 2, 1))                                 # [B, d, L]
        for layer in self.features:
            x = layer(x)
            if not self.spec.spline_trunk:
                x = F.relu(x)
        return F.adaptive_avg_pool_to_1(x)

    def __call__(self, tokens, train: bool = False) -> Tensor:
        h = self.features_forward(tokens, train)
        h = F.dropout(h, self.spec.dropout_p, train, self._dropout_rng)
        return self.head(h)

    forward = __call__


def build(spec: ModelSpec, vocab_size: int, seed: int = 0,
          embedding: EmbeddingTable | None = None, initialize: bool = True) -> TextClassifier:
    """Assemble a classifier.

    Without an explicit ``embedding`` a random table is created.  With
    ``initialize=False`` every array is allocated but left at zero, which is
    all that parameter counting needs.
    """
    if vocab_size < 1:
        raise InvalidArgument(f"vocab_size must be >= 1, got {vocab_size}")
    if embedding is None:
        if initialize:
            matrix = init_random(vocab_size, spec.embed_dim, seed).weight.data
        else:
            matrix = np.zeros((vocab_size, spec.embed_dim))
        embedding = EmbeddingTable(matrix, mode=spec.embed_mode)
    elif embedding.vocab_size != vocab_size:
        raise InvalidArgument(
            f"embedding has {embedding.vocab_size} rows but vocab_size is {vocab_size}")
    return TextClassifier(spec, embedding, seed=seed, initialize=initialize)


@dataclass
class ParamReport:
    components: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.components.values())

    def to_dict(self) -> dict:
        return {"components": dict(self.components), "arrays": dict(self.arrays),
                "total": self.total}


def count_params(model: TextClassifier) -> ParamReport:
    """Enumerate trainable arrays by name; components are embedding, each trunk layer, head."""
    report = ParamReport()
    for name, p in model.named_parameters():
        if not p.requires_grad:
            continue
        report.arrays[name] = int(p.size)
        parts = name.split(".")
        comp = ".".join(parts[:2]) if parts[0] == "features" else parts[0]
        report.components[comp] = report.components.get(comp, 0) + int(p.size)
    return report


def head_delta(spec: ModelSpec) -> int:
    """KAN-head parameter count minus MLP-head count for the configured feature width."""
    n, c = spec.channels[-1], spec.n_classes
    return n * c * (2 + spec.grid_size + spec.spline_order) - c * (n + 1)
