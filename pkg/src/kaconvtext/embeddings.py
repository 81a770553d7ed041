"""Vocabulary, word-vector files and the random / static / fine-tuned embedding modes."""
from __future__ import annotations

import warnings
from collections import Counter
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import InvalidArgument, ParseError
from .rng import make_rng

PAD, UNK = "<pad>", "<unk>"
PAD_INDEX, UNK_INDEX = 0, 1
MODES = ("random", "static", "finetuned")


class Vocabulary:
    """Token <-> index map with PAD at 0 and UNK at 1."""

    def __init__(self, tokens):
        tokens = list(tokens)
        if tokens[:2] != [PAD, UNK]:
            tokens = [PAD, UNK] + [t for t in tokens if t not in (PAD, UNK)]
        self.itos = tokens
        self.stoi = {t: i for i, t in enumerate(tokens)}
        if len(self.stoi) != len(tokens):
            raise InvalidArgument("vocabulary tokens must be unique")

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def encode_token(self, token: str) -> int:
        return self.stoi.get(token, UNK_INDEX)

    def encode(self, tokens) -> list[int]:
        if isinstance(tokens, str):
            tokens = tokens.split()
        return [self.stoi.get(t, UNK_INDEX) for t in tokens]

    def decode(self, index: int) -> str:
        return self.itos[index]

    def save(self, path):
        Path(path).write_text("\n".join(self.itos) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        return cls([t for t in lines if t])


def build_vocab(lines) -> Vocabulary:
    """Vocabulary over whitespace-separated tokens, most frequent first, ties
    broken lexicographically.  No frequency cutoff."""
    counts = Counter()
    n = 0
    for line in lines:
        n += 1
        counts.update(line.split())
    if not counts:
        raise InvalidArgument("cannot build a vocabulary from an empty corpus")
    counts.pop(PAD, None)
    counts.pop(UNK, None)
    ordered = sorted(counts, key=lambda t: (-counts[t], t))
    return Vocabulary([PAD, UNK] + ordered)


class EmbeddingTable:
    """A ``[V, d]`` matrix plus its training mode.

    Static tables never receive gradients.  The PAD row is zero and stays
    zero in every mode.
    """

    def __init__(self, matrix: np.ndarray, mode: str = "finetuned"):
        if mode not in MODES:
            raise InvalidArgument(f"embedding mode must be one of {MODES}, got {mode!r}")
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise InvalidArgument(f"embedding matrix must be 2-D, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidArgument("embedding matrix contains non-finite values")
        self.mode = mode
        self.weight = Tensor(matrix, requires_grad=self.trainable, name="weight")
        self.weight.data[PAD_INDEX] = 0.0

    @property
    def trainable(self) -> bool:
        return self.mode != "static"

    @property
    def dim(self) -> int:
        return self.weight.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.weight.shape[0]

    def named_parameters(self, prefix=""):
        yield prefix + "weight", self.weight


def init_random(vocab, d: int, seed: int = 0) -> EmbeddingTable:
    size = vocab if isinstance(vocab, int) else len(vocab)
    if d < 1:
        raise InvalidArgument(f"embedding dim must be >= 1, got {d}")
    rng = make_rng(seed, "embedding")
    matrix = rng.uniform(-0.5 / d, 0.5 / d, size=(size, d))
    return EmbeddingTable(matrix, mode="random")


def read_vectors(path, expected_dim: int | None = None) -> tuple[dict, int]:
    """Parse a text vector file (header ``count dim``, then ``token v1 .. vd``).

    Returns ``(vectors, dim)``.  When a token repeats, the first occurrence
    wins and a warning is issued.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n").split()
        if len(header) != 2:
            raise ParseError("header must be 'count dim'", line=1, path=path)
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError("header must hold two integers", line=1, path=path) from None
        if dim < 1 or count < 0:
            raise ParseError("header counts must be positive", line=1, path=path)
        if expected_dim is not None and dim != expected_dim:
            raise InvalidArgument(
                f"{path}: vector dimension {dim} does not match configured dim {expected_dim}")
        rows = 0
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.rstrip(" ").split(" ")
            if len(parts) != dim + 1:
                raise ParseError(f"expected a token and {dim} values, got {len(parts) - 1} values",
                                 line=lineno, path=path)
            try:
                vec = np.array([float(v) for v in parts[1:]])
            except ValueError:
                raise ParseError("non-numeric vector value", line=lineno, path=path) from None
            if not np.all(np.isfinite(vec)):
                raise ParseError("non-finite vector value", line=lineno, path=path)
            rows += 1
            token = parts[0]
            if token in vectors:
                warnings.warn(f"{path}:{lineno}: duplicate token {token!r}; keeping the first",
                              stacklevel=2)
                continue
            vectors[token] = vec
        if rows != count:
            warnings.warn(f"{path}: header announces {count} vectors, found {rows}", stacklevel=2)
    return vectors, dim


def load_pretrained(path, vocab: Vocabulary, dim: int | None = None, mode: str = "finetuned",
                    seed: int = 0) -> EmbeddingTable:
    """Table whose rows come from a vector file where available.

    Tokens missing from the file (and UNK) are drawn from N(0, 0.1^2); PAD is zero.
    """
    if mode == "random":
        raise InvalidArgument("pre-trained vectors imply mode 'static' or 'finetuned'")
    vectors, d = read_vectors(path, expected_dim=dim)
    rng = make_rng(seed, "embedding")
    matrix = rng.normal(0.0, 0.1, size=(len(vocab), d))
    for i, token in enumerate(vocab.itos):
        if i == PAD_INDEX or i == UNK_INDEX:
            continue
        vec = vectors.get(token)
        if vec is not None:
            matrix[i] = vec
    matrix[PAD_INDEX] = 0.0
    return EmbeddingTable(matrix, mode=mode)


def write_vectors(path, vocab: Vocabulary, matrix, include_reserved: bool = False) -> None:
    """Write rows in the text vector format; values use shortest round-trip repr."""
    matrix = np.asarray(matrix, dtype=np.float64)
    start = 0 if include_reserved else 2
    lines = [f"{len(vocab) - start} {matrix.shape[1]}"]
    for i in range(start, len(vocab)):
        lines.append(vocab.itos[i] + " " + " ".join(repr(float(v)) for v in matrix[i]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
