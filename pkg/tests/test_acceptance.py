"""The ten acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL criterion N`` line; the lines are
repeated in pytest's terminal summary.  Run alone with
``pytest tests/test_acceptance.py -v``.
"""
import hashlib
import time

import numpy as np
import pytest

from kaconvtext.autodiff import Tensor
from kaconvtext.layers import (
    KAConv1d, KANLayer, KANStack, fit_regression, kaconv1d_forward, kan_forward, kart_stack,
    regression_mse)
from kaconvtext.models import ModelSpec, build, count_params
from kaconvtext.pipeline.data import Dataset, load_dataset, stratified_split, synthetic_dataset_path
from kaconvtext.pipeline.metrics import classification_report, report_from_confusion
from kaconvtext.pipeline.training import RunConfig, train
from kaconvtext.rng import make_rng
from kaconvtext.spline import bspline_basis, make_uniform_grid

import gradsuite
from acceptance_log import verdict
from goldens import HEAD_DELTAS, PUBLISHED_TOTALS, TASKS
from oracles import kaconv_oracle, kan_oracle, metrics_oracle
from test_layers import XY_GOLDEN_MSE, _xy_data

pytestmark = pytest.mark.acceptance

VARIANTS = ("cnn", "cnn-kan", "kaconvtext-mlp", "kaconvtext-kan")


def test_criterion_01_parameter_totals():
    t0 = time.perf_counter()
    mismatches = []
    for (task, variant), want in PUBLISHED_TOTALS.items():
        n_classes, vocab = TASKS[task]
        spec = ModelSpec(variant, embed_dim=300, n_classes=n_classes)
        got = count_params(build(spec, vocab, initialize=False)).total
        if got != want:
            mismatches.append(f"{task}/{variant}: {got} != {want}")
    elapsed = time.perf_counter() - t0
    verdict(1, "parameter totals exact", not mismatches and elapsed < 1.0,
            f"12 totals, {len(mismatches)} mismatches, {elapsed:.2f}s")


def test_criterion_02_head_deltas():
    got = {}
    for c in HEAD_DELTAS:
        mlp = count_params(build(ModelSpec("kaconvtext-mlp", n_classes=c), 10, initialize=False))
        kan = count_params(build(ModelSpec("kaconvtext-kan", n_classes=c), 10, initialize=False))
        got[c] = kan.total - mlp.total
    verdict(2, "KAN minus MLP head deltas", got == HEAD_DELTAS, f"{got}")


def test_criterion_03_spline_invariants():
    xs = np.random.default_rng(0).uniform(-1, 1, 10_000)
    worst_pu, ok = 0.0, True
    for G, k in [(5, 3), (3, 3), (10, 3), (5, 0)]:
        g = make_uniform_grid(G, k)
        b = bspline_basis(xs, g)
        worst_pu = max(worst_pu, float(np.max(np.abs(b.sum(axis=1) - 1))))
        ok &= bool(b.min() >= 0)
        t = g.knots
        for i in range(g.n_basis):
            ok &= bool(np.all(b[(xs < t[i]) | (xs > t[i + k + 1]), i] == 0))
    verdict(3, "partition of unity, non-negativity, local support", ok and worst_pu <= 1e-12,
            f"max |sum - 1| = {worst_pu:.1e}")


def test_criterion_04_gradient_suite():
    t0 = time.perf_counter()
    worst = {}
    for name in gradsuite.REQUIRED:
        errs = gradsuite.run_trials(name, n=gradsuite.N_TRIALS)
        assert len(errs) >= 20
        worst[name] = max(errs)
    elapsed = time.perf_counter() - t0
    bad = {k: v for k, v in worst.items() if v >= gradsuite.TOL}
    verdict(4, "finite-difference gradient suite", not bad and elapsed < 120,
            f"{len(worst)} ops x 20 trials, worst {max(worst.values()):.1e}, {elapsed:.1f}s")


def test_criterion_05_oracle_equivalence():
    worst_conv = worst_kan = 0.0
    for case in range(50):
        rng = np.random.default_rng(1000 + case)
        G, k_ord = int(rng.choice([3, 5])), int(rng.choice([1, 2, 3]))
        layer = KAConv1d(int(rng.integers(1, 4)), int(rng.integers(1, 3)), int(rng.integers(1, 4)),
                         grid=make_uniform_grid(G, k_ord), rng=rng)
        layer.spline_weight.data[...] = rng.normal(size=layer.spline_weight.shape)
        x = rng.normal(size=(layer.in_channels, layer.kernel_size + int(rng.integers(0, 4))))
        diff = kaconv1d_forward(layer, Tensor(x)).data - kaconv_oracle(
            x, layer.spline_weight.data, layer.base_weight.data, layer.prelu_slope.data[0],
            G, k_ord)
        worst_conv = max(worst_conv, float(np.max(np.abs(diff))))

        kan = KANLayer(int(rng.integers(1, 6)), int(rng.integers(1, 4)),
                       grid=make_uniform_grid(G, k_ord), rng=rng)
        kan.spline_weight.data[...] = rng.normal(size=kan.spline_weight.shape)
        v = rng.uniform(-1.5, 1.5, size=kan.in_features)
        diff = kan_forward(kan, Tensor(v)).data - kan_oracle(
            v, kan.base_weight.data, kan.spline_weight.data, kan.spline_scaler.data, G, k_ord)
        worst_kan = max(worst_kan, float(np.max(np.abs(diff))))
    verdict(5, "forward passes equal brute-force oracles",
            worst_conv <= 1e-10 and worst_kan <= 1e-10,
            f"50+50 instances, kaconv {worst_conv:.1e}, kan {worst_kan:.1e}")


def test_criterion_06_grid_refinement():
    xs = np.linspace(-1, 1, 201)[:, None]
    ys = np.sin(np.pi * xs[:, 0])
    finals = []
    for G in (3, 5, 10, 20):
        model = KANStack([1, 1], grid=make_uniform_grid(G, 3), rng=make_rng(0))
        fit_regression(model, xs, ys, steps=500, lr=1e-2)
        finals.append(regression_mse(model, xs, ys))
    ok = all(b <= a for a, b in zip(finals, finals[1:]))
    verdict(6, "final MSE non-increasing in G", ok,
            "G=3,5,10,20: " + ", ".join(f"{v:.2e}" for v in finals))


def test_criterion_07_kart_harness():
    xs, ys = _xy_data()
    prod = kart_stack(2, grid=make_uniform_grid(10, 3), rng=make_rng(0))
    fit_regression(prod, xs, ys, steps=2000, lr=1e-2)
    mse_xy = regression_mse(prod, xs, ys)
    line = np.linspace(-1, 1, 101)[:, None]
    ident = kart_stack(1, rng=make_rng(0))
    fit_regression(ident, line, line[:, 0], steps=2000, lr=1e-2)
    mse_x = regression_mse(ident, line, line[:, 0])
    verdict(7, "KART stacks fit xy and x", mse_xy < XY_GOLDEN_MSE and mse_x < 1e-6,
            f"xy {mse_xy:.3e} < {XY_GOLDEN_MSE:.1e}, x {mse_x:.3e} < 1e-6")


@pytest.fixture(scope="module")
def synthetic_splits():
    return stratified_split(load_dataset(synthetic_dataset_path()), 0.8, seed=42)


@pytest.mark.parametrize("variant", VARIANTS)
def test_criterion_08_end_to_end_smoke(variant, synthetic_splits):
    tr, te = synthetic_splits
    cfg = RunConfig(model=variant, dim=100, epochs=10, batch_size=32, lr=1e-3, seed=42)
    t0 = time.perf_counter()
    _, _, manifest = train(cfg, tr, te)
    elapsed = time.perf_counter() - t0
    acc = manifest.metrics["accuracy"]
    losses = manifest.epoch_losses
    ok = acc >= 0.95 and elapsed < 60 and len(losses) == 10 and losses[-1] < losses[0]
    verdict(8, f"{variant} learns the synthetic corpus", ok,
            f"accuracy {acc:.4f}, loss {losses[0]:.3f} -> {losses[-1]:.4f}, {elapsed:.1f}s")


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_criterion_09_determinism(synthetic_splits, tmp_path):
    tr, te = synthetic_splits
    tr = Dataset(tr.records[:48] + tr.records[-48:], tr.labels)
    cfg = RunConfig(model="kaconvtext-kan", dim=100, epochs=2, seed=42)
    runs = []
    for name in ("a", "b"):
        _, _, manifest = train(cfg, tr, te, export_dir=tmp_path / name)
        csvs = [_sha(tmp_path / name / f"splines_epoch{e}.csv") for e in (1, 2)]
        runs.append((manifest.to_json(include_timings=False), csvs))
    ok = runs[0] == runs[1]
    verdict(9, "identical config and seed give identical outputs", ok,
            "manifests without timings and 2 spline exports compared byte for byte")


def test_criterion_10_metrics_oracle():
    worst = 0.0
    worked = report_from_confusion(np.array([[8, 2], [1, 9]]), ["a", "b"])
    a, w = metrics_oracle([0] * 10 + [1] * 10, [0] * 8 + [1] * 2 + [0] + [1] * 9, 2)
    worst = max(worst, abs(worked.accuracy - a), abs(worked.weighted_f1 - w))
    example_ok = abs(worked.accuracy - 0.85) <= 1e-9 and abs(worked.weighted_f1 - 0.8496) < 1e-4
    for case in range(200):
        rng = np.random.default_rng(case)
        c, n = int(rng.integers(1, 6)), int(rng.integers(1, 60))
        y = rng.integers(0, c, size=n)
        p = np.where(rng.random(n) < rng.random(), y, rng.integers(0, c, size=n))
        r = classification_report(y, p, list(range(c)))
        a, w = metrics_oracle(y.tolist(), p.tolist(), c)
        worst = max(worst, abs(r.accuracy - a), abs(r.weighted_f1 - w))
    verdict(10, "accuracy and weighted F1 equal the counting oracle",
            example_ok and worst <= 1e-9,
            f"200 cases + worked example (0.85, {worked.weighted_f1:.4f}), worst {worst:.1e}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
