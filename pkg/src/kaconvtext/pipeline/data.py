"""TSV datasets, stratified splitting and the synthetic separable corpus."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..errors import InvalidArgument, ParseError
from ..rng import make_rng


class Record(NamedTuple):
    label: str
    text: str

    @property
    def tokens(self) -> list[str]:
        return self.text.split()


@dataclass
class Dataset:
    records: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if not self.labels:
            self.labels = sorted({r.label for r in self.records})

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def texts(self) -> list[str]:
        return [r.text for r in self.records]

    def label_counts(self) -> dict:
        counts = dict.fromkeys(self.labels, 0)
        for r in self.records:
            counts[r.label] = counts.get(r.label, 0) + 1
        return counts


def parse_lines(lines, path=None) -> Dataset:
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        if "\t" not in line:
            raise ParseError("missing TAB between label and text", line=lineno, path=path)
        label, text = line.split("\t", 1)
        label = label.strip()
        text = " ".join(text.split())
        if not label:
            raise ParseError("empty label", line=lineno, path=path)
        if not text:
            raise ParseError("empty text", line=lineno, path=path)
        records.append(Record(label, text))
    return Dataset(records)


def load_dataset(path) -> Dataset:
    """Read ``label<TAB>text`` lines (UTF-8; CRLF tolerated; blank lines skipped)."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        return parse_lines(fh, path=path)


def write_dataset(path, ds: Dataset) -> None:
    body = "".join(f"{r.label}\t{r.text}\n" for r in ds.records)
    Path(path).write_text(body, encoding="utf-8", newline="")


def n_train(n: int, ratio: float) -> int:
    # round first so that e.g. 0.8 * 10 cannot land on 7.999...
    return math.floor(round(ratio * n, 9))


def stratified_split(ds: Dataset, ratio: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Per class, ``floor(ratio * n_c)`` shuffled records go to train, the rest to test.

    Both halves keep the original label list; records keep class-then-shuffle order.
    """
    if not 0.0 < ratio < 1.0:
        raise InvalidArgument(f"split ratio must lie in (0, 1), got {ratio}")
    by_class: dict[str, list] = {label: [] for label in ds.labels}
    for r in ds.records:
        by_class.setdefault(r.label, []).append(r)
    small = [f"{c} ({len(rs)})" for c, rs in by_class.items() if len(rs) < 2]
    if small:
        raise InvalidArgument(f"classes need at least 2 records to split: {', '.join(small)}")
    rng = make_rng(seed, "split")
    train, test = [], []
    for label in ds.labels:
        rs = by_class[label]
        order = rng.permutation(len(rs))
        cut = n_train(len(rs), ratio)
        train.extend(rs[i] for i in order[:cut])
        test.extend(rs[i] for i in order[cut:])
    return Dataset(train, list(ds.labels)), Dataset(test, list(ds.labels))


def make_separable_dataset(n_per_class: int = 200, n_classes: int = 2, vocab_per_class: int = 8,
                           min_len: int = 16, max_len: int = 16, n_shared: int = 0,
                           shared_fraction: float = 0.0, seed: int = 0) -> Dataset:
    """Each class draws its content words from its own disjoint vocabulary, so a
    bag-of-words separator exists.

    With ``n_shared > 0`` a fraction ``shared_fraction`` of the positions is
    filled with filler words common to every class.
    """
    rng = np.random.default_rng(seed)
    labels = [f"class{c}" for c in range(n_classes)]
    shared = [f"s{i}" for i in range(n_shared)]
    records = []
    for c, label in enumerate(labels):
        words = [f"c{c}w{i}" for i in range(vocab_per_class)]
        for _ in range(n_per_class):
            n = int(rng.integers(min_len, max_len + 1))
            toks = [words[j] for j in rng.integers(0, len(words), n)]
            if shared:
                for pos in np.flatnonzero(rng.random(n) < shared_fraction):
                    toks[pos] = shared[int(rng.integers(0, n_shared))]
                if all(t in shared for t in toks):
                    toks[0] = words[int(rng.integers(0, len(words)))]
            records.append(Record(label, " ".join(toks)))
    order = rng.permutation(len(records))
    return Dataset([records[i] for i in order], labels)


SYNTHETIC_DATASET = Path(__file__).resolve().parent.parent / "data" / "synthetic_separable.tsv"


def synthetic_dataset_path() -> Path:
    """The shipped two-class separable corpus (``make_separable_dataset()`` defaults)."""
    return SYNTHETIC_DATASET
