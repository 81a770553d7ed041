import json

import numpy as np
import pytest

from kaconvtext.embeddings import build_vocab
from kaconvtext.errors import InvalidArgument, ParseError
from kaconvtext.models import VARIANTS, ModelSpec, build
from kaconvtext.serialization import (
    assign_params, load_checkpoint, load_params, save_checkpoint, save_params)


def test_params_round_trip(tmp_path):
    model = build(ModelSpec("kaconvtext-kan", embed_dim=5, channels=(3, 2, 2)), 9, seed=4)
    save_params(tmp_path / "p.bin", model.named_parameters())
    arrays = load_params(tmp_path / "p.bin")
    assert list(arrays) == [n for n, _ in model.named_parameters()]
    for name, p in model.named_parameters():
        assert arrays[name].tobytes() == p.data.tobytes()
    header = json.loads((tmp_path / "p.bin").read_bytes().split(b"\n", 1)[0])
    assert header["format"] == "kaconvtext-params" and header["version"] == 1
    assert header["records"][0] == {"name": "embedding.weight", "shape": [9, 5], "offset": 0,
                                    "count": 45}


def test_save_is_deterministic(tmp_path):
    model = build(ModelSpec("cnn", embed_dim=5, channels=(2, 2, 2)), 9, seed=4)
    save_params(tmp_path / "a.bin", model.named_parameters())
    save_params(tmp_path / "b.bin", model.named_parameters())
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_bad_files(tmp_path):
    (tmp_path / "x.bin").write_bytes(b'{"format": "other"}\n')
    with pytest.raises(ParseError):
        load_params(tmp_path / "x.bin")
    (tmp_path / "y.bin").write_bytes(b"not json\n")
    with pytest.raises(ParseError):
        load_params(tmp_path / "y.bin")
    model = build(ModelSpec("cnn", embed_dim=5, channels=(2, 2, 2)), 9)
    save_params(tmp_path / "z.bin", model.named_parameters())
    (tmp_path / "z.bin").write_bytes((tmp_path / "z.bin").read_bytes()[:-8])
    with pytest.raises(ParseError):
        load_params(tmp_path / "z.bin")


def test_assign_shape_mismatch():
    model = build(ModelSpec("cnn", embed_dim=5, channels=(2, 2, 2)), 9)
    arrays = {n: p.data.copy() for n, p in model.named_parameters()}
    arrays["head.bias"] = np.zeros(7)
    with pytest.raises(InvalidArgument):
        assign_params(model, arrays)


@pytest.mark.parametrize("variant", VARIANTS)
def test_checkpoint_round_trip(tmp_path, variant):
    vocab = build_vocab(["a b c", "d e"])
    spec = ModelSpec(variant, embed_dim=6, n_classes=3, channels=(4, 3, 2))
    model = build(spec, len(vocab), seed=2)
    save_checkpoint(tmp_path / "ck", model, vocab, extra={"labels": ["x", "y", "z"]})
    loaded, vocab2, extra = load_checkpoint(tmp_path / "ck")
    assert vocab2 == vocab and extra == {"labels": ["x", "y", "z"]}
    assert loaded.spec == spec
    tokens = np.arange(14).reshape(1, 14) % len(vocab)
    assert model(tokens).data.tobytes() == loaded(tokens).data.tobytes()


def test_checkpoint_version_checked(tmp_path):
    vocab = build_vocab(["a"])
    save_checkpoint(tmp_path / "ck", build(ModelSpec("cnn", embed_dim=4, channels=(2, 2, 2)),
                                           len(vocab)), vocab)
    (tmp_path / "ck" / "VERSION").write_text("kaconvtext-checkpoint 99\n")
    with pytest.raises(ParseError):
        load_checkpoint(tmp_path / "ck")
