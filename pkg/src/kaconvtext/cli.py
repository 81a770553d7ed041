"""Command-line entry point: ``kaconvtext {split,train,eval,count-params,export-splines}``.

Errors are reported as a single ``error: <kind>: <message>`` line on stderr;
usage errors exit with status 2, every other failure with status 1.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import InvalidArgument, KAConvError
from .models import VARIANTS, ModelSpec, build, count_params
from .pipeline.data import load_dataset, stratified_split, write_dataset
from .pipeline.export import export_splines
from .pipeline.training import RunConfig, evaluate, train
from .serialization import load_checkpoint, save_checkpoint

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("KACONV_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"KACONV_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def read_config_file(path) -> dict:
    """JSON object, or ``key=value`` lines (``#`` comments allowed)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            out[key.replace("-", "_")] = json.loads(value)
        except json.JSONDecodeError:
            out[key.replace("-", "_")] = value
    return out


# flag name -> RunConfig field
_CONFIG_FLAGS = {
    "model": "model", "embed": "embed", "vectors": "vectors", "dim": "dim",
    "epochs": "epochs", "batch_size": "batch_size", "lr": "lr", "seed": "seed",
    "grid_size": "grid_size", "spline_order": "spline_order", "weight_decay": "weight_decay",
    "max_len": "max_len", "ratio": "ratio", "vector_algorithm": "vector_algorithm",
}


def _run_config(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for flag, key in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    if values.get("seed") is None:
        values["seed"] = _seed(args)
    values.setdefault("task", Path(args.task_file).stem)
    if args.vectors and "embed" not in values:
        values["embed"] = "finetuned"
    try:
        return RunConfig.from_dict(values)
    except (InvalidArgument, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _add_model_flags(p):
    p.add_argument("--model", choices=VARIANTS)
    p.add_argument("--embed", choices=("random", "static", "finetuned"))
    p.add_argument("--vectors", metavar="PATH")
    p.add_argument("--vector-algorithm", choices=("cbow", "skipgram"))
    p.add_argument("--dim", type=int, choices=(100, 300))
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float)
    p.add_argument("--max-len", type=int)
    p.add_argument("--grid-size", type=int)
    p.add_argument("--spline-order", type=int)
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", metavar="FILE", help="key=value or JSON config; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kaconvtext", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("split", help="stratified train/test split of a TSV dataset")
    p.add_argument("--task-file", required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("train", help="train a model and write checkpoint + manifest")
    p.add_argument("--task-file", required=True, help="training TSV (split internally "
                   "unless --test-file is given)")
    p.add_argument("--test-file")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--export-splines", metavar="DIR")
    _add_model_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a TSV dataset")
    p.add_argument("--checkpoint", required=True, metavar="DIR")
    p.add_argument("--task-file", required=True)

    p = sub.add_parser("count-params", help="exact trainable parameter count")
    p.add_argument("--model", choices=VARIANTS, required=True)
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--grid-size", type=int, default=5)
    p.add_argument("--spline-order", type=int, default=3)
    p.add_argument("--breakdown", action="store_true", help="print per-component JSON")

    p = sub.add_parser("export-splines", help="dump KAConv spline coefficients as CSV")
    p.add_argument("--checkpoint", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--epoch", type=int, default=0)
    return parser


def cmd_split(args):
    ds = load_dataset(args.task_file)
    train_set, test_set = stratified_split(ds, args.ratio, _seed(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(out / "train.tsv", train_set)
    write_dataset(out / "test.tsv", test_set)
    print(json.dumps({"train": len(train_set), "test": len(test_set)}))


def cmd_train(args):
    config = _run_config(args)
    ds = load_dataset(args.task_file)
    if args.test_file:
        train_set, test_set = ds, load_dataset(args.test_file)
    else:
        train_set, test_set = stratified_split(ds, config.ratio, config.seed)
    model, vocab, manifest = train(config, train_set, test_set, export_dir=args.export_splines)
    out = Path(args.out)
    save_checkpoint(out / "model", model, vocab, extra={"labels": manifest.labels})
    manifest.save(out / "manifest.json")
    print(json.dumps({"accuracy": manifest.metrics["accuracy"],
                      "weighted_f1": manifest.metrics["weighted_f1"],
                      "params": manifest.params["total"]}))


def cmd_eval(args):
    model, vocab, extra = load_checkpoint(args.checkpoint)
    report = evaluate(model, vocab, load_dataset(args.task_file), extra["labels"])
    print(json.dumps(report.to_dict(), sort_keys=True))


def cmd_count_params(args):
    spec = ModelSpec(variant=args.model, embed_dim=args.dim, n_classes=args.classes,
                     grid_size=args.grid_size, spline_order=args.spline_order)
    report = count_params(build(spec, args.vocab_size, initialize=False))
    if args.breakdown:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.total)


def cmd_export_splines(args):
    model, _, _ = load_checkpoint(args.checkpoint)
    export_splines(model, args.epoch, args.out)


COMMANDS = {
    "split": cmd_split,
    "train": cmd_train,
    "eval": cmd_eval,
    "count-params": cmd_count_params,
    "export-splines": cmd_export_splines,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except KAConvError as exc:
        print(f"error: {exc.kind}: {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: io: {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
