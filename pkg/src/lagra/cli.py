"""Command-line entry points: ``lagra train | predict | export``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .graph import DataFormatError, SplitSpec, load_tudataset, split_dataset
from .model import (
    ModelFormatError,
    agis_scatter,
    deserialize,
    export_report,
    model_from_record,
    predict,
    serialize,
)
from .optimizer import OptimizerConfig, log_to_csv, regularization_path

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3

logger = logging.getLogger("lagra")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _split_arg(text):
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad split {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("split needs three comma-separated fractions")
    return parts


def build_parser():
    p = _Parser(prog="lagra", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="fit a regularization path and save the selected model")
    t.add_argument("--data", required=True, help="directory holding the TUDataset files")
    t.add_argument("--name", required=True, help="dataset name (file prefix)")
    t.add_argument("--maxpat", type=int, default=5)
    t.add_argument("--rho", type=float, default=0.1)
    t.add_argument("--grid", type=int, default=100, help="number of lambda values")
    t.add_argument("--lambda-min-ratio", type=float, default=0.01)
    t.add_argument("--patience", type=int, default=5)
    t.add_argument("--max-epoch", type=int, default=100)
    t.add_argument("--split", type=_split_arg, default=[0.6, 0.2, 0.2])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default="model.json", help="model document path")
    t.add_argument("--log", default=None, help="per-epoch training log (CSV)")
    t.add_argument("--path-log", default=None, help="per-lambda summary (CSV)")
    t.add_argument("--timing", action="store_true", help="add wall-clock columns to the logs")

    pr = sub.add_parser("predict", help="score graphs with a saved model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--name", required=True)
    pr.add_argument("--out", default=None, help="CSV output (default: stdout)")

    e = sub.add_parser("export", help="write the interpretability report")
    e.add_argument("--model", required=True)
    e.add_argument("--top-k", type=int, default=10)
    e.add_argument("--out", default=None, help="report path (default: stdout)")
    e.add_argument("--data", default=None, help="graphs for the AGIS scatter dump")
    e.add_argument("--name", default=None)
    e.add_argument("--scatter", default=None, help="AGIS scatter CSV path")
    return p


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_model(path):
    try:
        with open(path, "rb") as fh:
            return deserialize(fh.read())
    except OSError as exc:
        raise DataFormatError(path, None, f"cannot read model: {exc.strerror}") from None
    except ModelFormatError as exc:
        raise DataFormatError(path, None, str(exc)) from None


def select_record(records):
    """Best validation accuracy; ties go to lower validation loss, then larger lambda."""
    return max(records, key=lambda r: (r.val_accuracy, -r.val_loss, r.lam))


def _path_csv(records, timing):
    cols = ["lambda", "epoch", "active", "nonzero", "beta0", "train_loss", "val_loss",
            "val_accuracy", "visited"] + (["seconds"] if timing else [])
    lines = [",".join(cols)]
    for r in records:
        vals = [r.lam, r.epoch, len(r.active_keys), len(r.support), r.beta0, r.train_loss,
                r.val_loss, r.val_accuracy, r.visited] + ([r.seconds] if timing else [])
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in vals))
    return "\n".join(lines) + "\n"


def _accuracy(model, dataset):
    if len(dataset) == 0:
        return None
    hits = [predict(model, g)[1] == g.y for g in dataset.graphs]
    return float(np.mean(hits))


def cmd_train(args):
    try:
        split = SplitSpec(*args.split, seed=args.seed)
        config = OptimizerConfig(
            maxpat=args.maxpat, rho=args.rho, grid_size=args.grid,
            lambda_min_ratio=args.lambda_min_ratio, patience=args.patience,
            max_epoch=args.max_epoch, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dataset = load_tudataset(args.data, args.name)
    try:
        train, val, test = split_dataset(dataset, split)
    except ValueError as exc:
        raise DataFormatError(args.data, None, str(exc)) from None
    if len(val) == 0:
        raise DataFormatError(args.data, None, "validation split is empty")
    if len(set(train.y.tolist())) < 2:
        raise DataFormatError(args.data, None, "training split holds a single class")

    result = regularization_path(train, val, config)
    best = select_record(result.records)
    model = model_from_record(best, config.rho, config.maxpat, dataset)
    with open(args.out, "wb") as fh:
        fh.write(serialize(model))
    if args.log:
        _write(args.log, log_to_csv(result.log, timing=args.timing))
    if args.path_log:
        _write(args.path_log, _path_csv(result.records, args.timing))

    summary = {
        "lambda_max": result.lambda_max,
        "selected_lambda": best.lam,
        "nonzero": len(model.graphlets),
        "train_accuracy": _accuracy(model, train),
        "val_accuracy": best.val_accuracy,
        "test_accuracy": _accuracy(model, test),
    }
    for k, v in summary.items():
        print(f"{k}: {'n/a' if v is None else v}")
    return EXIT_OK


def cmd_predict(args):
    model = _load_model(args.model)
    dataset = load_tudataset(args.data, args.name)
    rows = ["graph_id,score,label"]
    for i, g in enumerate(dataset.graphs):
        try:
            score, label, _ = predict(model, g)
        except ValueError as exc:
            raise DataFormatError(args.data, None, str(exc)) from None
        rows.append(f"{i},{score!r},{label}")
    _write(args.out, "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_export(args):
    if args.top_k < 1:
        raise UsageError("--top-k must be at least 1")
    model = _load_model(args.model)
    _write(args.out, export_report(model, args.top_k))
    if args.scatter:
        if not (args.data and args.name):
            raise UsageError("--scatter needs --data and --name")
        dataset = load_tudataset(args.data, args.name)
        _write(args.scatter, agis_scatter(model, dataset))
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "export": cmd_export}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"lagra: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"lagra: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.debug("runtime failure", exc_info=True)
        print(f"lagra: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
