import json
import subprocess
import sys

import pytest

from kaconvtext.cli import main, read_config_file
from kaconvtext.pipeline.data import make_separable_dataset, write_dataset

from goldens import PUBLISHED_TOTALS, TASKS


@pytest.fixture()
def task_file(tmp_path):
    path = tmp_path / "task.tsv"
    write_dataset(path, make_separable_dataset(n_per_class=20, seed=5))
    return path


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_count_params_prints_total(capsys):
    code, out, _ = _run(["count-params", "--model", "cnn", "--dim", "300", "--vocab-size", "2343",
                         "--classes", "2"], capsys)
    assert code == 0 and out.strip() == "958070"


def test_count_params_breakdown(capsys):
    code, out, _ = _run(["count-params", "--model", "kaconvtext-kan", "--vocab-size", "14759",
                         "--classes", "9", "--breakdown"], capsys)
    report = json.loads(out)
    assert code == 0 and report["total"] == PUBLISHED_TOTALS[("language", "kaconvtext-kan")]
    assert report["components"]["embedding"] == 14759 * 300


def test_count_params_subprocess():
    n_classes, vocab = TASKS["news"]
    res = subprocess.run([sys.executable, "-m", "kaconvtext.cli", "count-params", "--model",
                          "kaconvtext-mlp", "--vocab-size", str(vocab), "--classes",
                          str(n_classes)], capture_output=True, text=True, check=True)
    assert res.stdout.strip() == str(PUBLISHED_TOTALS[("news", "kaconvtext-mlp")])


def test_train_requires_task_file(capsys, tmp_path):
    code, _, err = _run(["train", "--out", tmp_path], capsys)
    assert code == 2
    assert err.startswith("error: usage:") and err.count("\n") == 1


def test_unknown_flag(capsys):
    code, _, err = _run(["count-params", "--bogus"], capsys)
    assert code == 2 and "error: usage" in err


def test_conflicting_embedding_flags(capsys, tmp_path, task_file):
    code, _, err = _run(["train", "--task-file", task_file, "--out", tmp_path / "o",
                         "--embed", "random", "--vectors", tmp_path / "v.vec"], capsys)
    assert code == 2 and "conflicts" in err
    code, _, err = _run(["train", "--task-file", task_file, "--out", tmp_path / "o",
                         "--embed", "static"], capsys)
    assert code == 2


def test_split_is_deterministic(capsys, tmp_path, task_file):
    for out in ("a", "b"):
        code, stdout, _ = _run(["split", "--task-file", task_file, "--ratio", "0.8", "--seed", "7",
                                "--out", tmp_path / out], capsys)
        assert code == 0 and json.loads(stdout) == {"train": 32, "test": 8}
    for name in ("train.tsv", "test.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_env_fallback(capsys, tmp_path, task_file, monkeypatch):
    monkeypatch.setenv("KACONV_SEED", "7")
    _run(["split", "--task-file", task_file, "--out", tmp_path / "env"], capsys)
    _run(["split", "--task-file", task_file, "--seed", "7", "--out", tmp_path / "flag"], capsys)
    assert (tmp_path / "env" / "train.tsv").read_bytes() == \
        (tmp_path / "flag" / "train.tsv").read_bytes()
    monkeypatch.setenv("KACONV_SEED", "x")
    code, _, _ = _run(["split", "--task-file", task_file, "--out", tmp_path / "bad"], capsys)
    assert code == 2


def test_missing_file_is_one_line_error(capsys, tmp_path):
    code, _, err = _run(["split", "--task-file", tmp_path / "nope.tsv", "--out", tmp_path],
                        capsys)
    assert code == 1 and err.startswith("error: io:") and err.count("\n") == 1


def test_parse_error_reported(capsys, tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tx\nno-tab\n")
    code, _, err = _run(["split", "--task-file", bad, "--out", tmp_path], capsys)
    assert code == 1 and err.startswith("error: parse-error:") and "bad.tsv:2:" in err


def test_train_eval_export(capsys, tmp_path, task_file):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small network\nchannels = [6, 6, 6]\nepochs = 2\nmodel = cnn\n")
    code, out, err = _run(["train", "--task-file", task_file, "--out", tmp_path / "run",
                           "--config", cfg, "--model", "kaconvtext-mlp", "--dim", "100",
                           "--export-splines", tmp_path / "splines"], capsys)
    assert code == 0, err
    summary = json.loads(out)
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["config"]["model"] == "kaconvtext-mlp"      # flag beats config file
    assert manifest["config"]["channels"] == [6, 6, 6]
    assert len(manifest["epoch_losses"]) == 2
    assert summary["accuracy"] == manifest["metrics"]["accuracy"]
    assert sorted(p.name for p in (tmp_path / "splines").iterdir()) == \
        ["splines_epoch1.csv", "splines_epoch2.csv"]

    code, out, _ = _run(["eval", "--checkpoint", tmp_path / "run" / "model",
                         "--task-file", task_file], capsys)
    assert code == 0 and 0.0 <= json.loads(out)["accuracy"] <= 1.0

    code, _, _ = _run(["export-splines", "--checkpoint", tmp_path / "run" / "model",
                       "--out", tmp_path / "final.csv", "--epoch", "2"], capsys)
    assert code == 0
    assert (tmp_path / "final.csv").read_bytes() == \
        (tmp_path / "splines" / "splines_epoch2.csv").read_bytes()


def test_export_cnn_checkpoint_fails(capsys, tmp_path, task_file):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"channels": [4, 4, 4], "epochs": 0}))
    assert _run(["train", "--task-file", task_file, "--out", tmp_path / "run", "--config", cfg,
                 "--model", "cnn", "--dim", "100"], capsys)[0] == 0
    code, _, err = _run(["export-splines", "--checkpoint", tmp_path / "run" / "model",
                         "--out", tmp_path / "x.csv"], capsys)
    assert code == 1 and err.startswith("error: unsupported-model:")


def test_read_config_file(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("lr = 0.01\nbatch-size=16\ntask = news # comment\n")
    assert read_config_file(f) == {"lr": 0.01, "batch_size": 16, "task": "news"}
