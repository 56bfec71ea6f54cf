"""``systolic-dse`` command line: labels, gen, stats, pca, train, predict, eval.

Exit codes: 0 success, 1 usage or validation error, 2 I/O or data corruption.
Every artifact-producing command writes ``<output>.manifest.json`` next to its
output with the fully resolved parameters.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from .core import LabelTable, build_table, describe_entry, enumerate_case1_labels
from .data import (
    DEFAULT_BUCKETS, GenParams, SamplingRanges, default_encoder, generate_dataset, read_csv, resolve_threads,
    write_csv,
)
from .errors import (
    CheckpointError, DataError, EncodingError, InfeasibleError, ParameterError, SchemaError,
    ShapeError,
)
from .metrics import normalized_performance
from .model import ModelSpec, TrainConfig, init_model, load_checkpoint, predict, train
from .sched import load_platform
from .stats import class_histogram, top2_pca, write_histogram_csv, write_pca_csv

log = logging.getLogger("systolic_dse")

DEFAULT_EPOCHS = {1: 15, 2: 22, 3: 15}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_manifest(out: Path, args: argparse.Namespace, started: float, inputs=(), extra=None):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    manifest = {
        "subcommand": args.command,
        "parameters": params,
        "seed": params.get("seed"),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(out)],
        "version": __version__,
        "duration_s": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    Path(f"{out}.manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _table_params(args) -> dict:
    if args.case == 1:
        return {"min_exp": args.min_exp, "max_mac_exp": args.max_mac_exp}
    if args.case == 2:
        return {"min_kb": args.min_kb, "max_kb": args.max_kb, "step_kb": args.step_kb}
    if args.platform:
        return {"platform": load_platform(args.platform)}
    return {}


def _load_table(args) -> LabelTable:
    if getattr(args, "labels", None):
        table = LabelTable.from_json(json.loads(Path(args.labels).read_text()))
        if table.case_id != args.case:
            raise UsageError(f"label file is for case {table.case_id}, not {args.case}")
        return table
    return build_table(args.case, _table_params(args))


def _gen_params(args) -> GenParams:
    return GenParams(
        ranges=SamplingRanges(args.m_max, args.n_max, args.k_max),
        mac_exp_min=args.mac_exp_min, mac_exp_max=args.mac_exp_max,
        bw_max=args.bw_max, budget_min_kb=args.budget_min_kb,
        budget_max_kb=args.budget_max_kb, budget_step_kb=args.budget_step_kb,
        array_table=enumerate_case1_labels(args.min_exp, args.max_mac_exp),
    )


def cmd_labels(args) -> int:
    started = time.time()
    table = _load_table(args)
    out = Path(args.out)
    out.write_text(table.dumps())
    _write_manifest(out, args, started, extra={"entries": len(table)})
    print(f"{len(table)} entries -> {out}")
    return 0


def cmd_gen(args) -> int:
    started = time.time()
    table = _load_table(args)
    ds = generate_dataset(args.case, args.n, args.seed, _gen_params(args), table,
                          threads=resolve_threads(args.threads))
    out = Path(args.out)
    write_csv(ds, out)
    _write_manifest(out, args, started, extra={
        "table_params": json.loads(json.dumps(table.params, default=lambda p: p.to_json())),
        "skipped": ds.skipped,
    })
    print(f"{len(ds)} records -> {out} ({ds.skipped} infeasible queries resampled)")
    return 0


def cmd_stats(args) -> int:
    started = time.time()
    ds = read_csv(args.input, args.case)
    hist = class_histogram(ds.labels)
    out = Path(args.out)
    write_histogram_csv(hist, out)
    _write_manifest(out, args, started, inputs=[args.input])
    top = sum(f for _, f in hist[:10])
    print(f"{len(hist)} classes, top-10 mass {top:.4f} -> {out}")
    return 0


def cmd_pca(args) -> int:
    started = time.time()
    ds = read_csv(args.input, args.case)
    try:
        classes = tuple(int(c) for c in args.classes.split(","))
    except ValueError:
        raise UsageError(f"--classes must be two integers, got {args.classes!r}") from None
    if len(classes) != 2:
        raise UsageError("--classes needs exactly two label ids")
    present = set(np.unique(ds.labels).tolist())
    for c in classes:
        if c not in present:
            raise DataError(f"class {c} does not occur in {args.input}")
    result = top2_pca(ds.features, ds.labels, classes)
    out = Path(args.out)
    write_pca_csv(result, out)
    _write_manifest(out, args, started, inputs=[args.input])
    comps = "; ".join(", ".join(f"{v:.5f}" for v in c) for c in result.components)
    print(f"components: {comps} -> {out}")
    return 0


def cmd_train(args) -> int:
    started = time.time()
    table = _load_table(args)
    ds = read_csv(args.input, args.case, len(table))
    encoder = default_encoder(table, _gen_params(args), buckets=args.buckets)
    spec = ModelSpec(encoder, len(table), args.embedding_dim, args.hidden, args.baseline)
    meta = {"case": args.case, "labels": json.loads(table.dumps())["params"]}
    model = init_model(spec, args.seed, meta)
    epochs = args.epochs or DEFAULT_EPOCHS[args.case]
    cfg = TrainConfig(epochs=epochs, batch_size=args.batch_size, learning_rate=args.lr,
                      validation_fraction=args.val_fraction, seed=args.seed)
    out = Path(args.out)
    report = train(model, ds, cfg, checkpoint_path=out)
    lines = ["epoch,train_loss,train_acc,val_acc", *report.log_lines()]
    Path(f"{out}.log.csv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    _write_manifest(out, args, started, inputs=[args.input], extra={"epochs": epochs})
    return 0


def _model_table(model) -> LabelTable:
    case = model.meta.get("case")
    if case not in (1, 2, 3):
        raise CheckpointError("checkpoint does not record its case study")
    return build_table(case, model.meta.get("labels", {}))


def cmd_predict(args) -> int:
    model = load_checkpoint(args.model)
    table = _model_table(model)
    try:
        raw = [int(v) for v in args.input.split(",")]
    except ValueError:
        raise UsageError(f"--input must be comma-separated integers, got {args.input!r}") from None
    if len(raw) != model.spec.num_features:
        raise UsageError(f"model expects {model.spec.num_features} features, got {len(raw)}")
    label = predict(model, np.asarray(raw))
    print(f"{label}\t{describe_entry(table[label])}")
    return 0


def cmd_eval(args) -> int:
    started = time.time()
    model = load_checkpoint(args.model)
    table = _model_table(model)
    case = model.meta["case"]
    if args.case is not None and args.case != case:
        raise UsageError(f"model is for case {case}, --case says {args.case}")
    ds = read_csv(args.input, case, len(table))
    preds = predict(model, ds.features)
    report = normalized_performance(case, ds.features, preds, ds.labels, table,
                                    verify=not args.no_verify)
    out = Path(args.report)
    report.write_json(out)
    if args.ratios:
        report.write_ratios_csv(args.ratios)
    hist_path = Path(args.hist) if args.hist else out.with_suffix(".hist.csv")
    actual, predicted = Counter(ds.labels.tolist()), Counter(np.asarray(preds).tolist())
    with open(hist_path, "w", encoding="utf-8") as fh:
        fh.write("label,actual,predicted\n")
        for label in sorted(set(actual) | set(predicted)):
            fh.write(f"{label},{actual[label]},{predicted[label]}\n")
    _write_manifest(out, args, started, inputs=[args.model, args.input])
    print(json.dumps(report.to_json()))
    return 0


def _add_table_flags(p, case_required=True):
    p.add_argument("--case", type=int, choices=(1, 2, 3), required=case_required)
    p.add_argument("--labels", help="label-table JSON (otherwise built from the flags below)")
    p.add_argument("--min-exp", type=int, default=4, help="case 1: smallest array dim exponent (default 4)")
    p.add_argument("--max-mac-exp", type=int, default=18, help="case 1: MAC cap exponent (default 18)")
    p.add_argument("--min-kb", type=int, default=100, help="case 2: smallest buffer (default 100)")
    p.add_argument("--max-kb", type=int, default=1000, help="case 2: largest buffer (default 1000)")
    p.add_argument("--step-kb", type=int, default=100, help="case 2: buffer step (default 100)")
    p.add_argument("--platform", help="case 3: platform JSON (default: 128x128, 32x32, 256x16, 16x256)")


def _add_sampling_flags(p):
    p.add_argument("--m-max", type=int, default=100_000)
    p.add_argument("--n-max", type=int, default=10_000)
    p.add_argument("--k-max", type=int, default=1_000)
    p.add_argument("--mac-exp-min", type=int, default=None, help="default: 2 * min-exp")
    p.add_argument("--mac-exp-max", type=int, default=None, help="default: max-mac-exp")
    p.add_argument("--bw-max", type=int, default=100)
    p.add_argument("--budget-min-kb", type=int, default=300)
    p.add_argument("--budget-max-kb", type=int, default=3000)
    p.add_argument("--budget-step-kb", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="systolic-dse", description=__doc__.splitlines()[0],
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("labels", help="write a label table as JSON")
    _add_table_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("gen", help="generate an oracle-labelled dataset CSV")
    _add_table_flags(p)
    _add_sampling_flags(p)
    p.add_argument("-n", type=int, required=True, help="number of records")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: $SYSTOLIC_DSE_THREADS or CPU count)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", help="class frequency histogram CSV")
    p.add_argument("--case", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pca", help="two-class PCA projection CSV")
    p.add_argument("--case", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--classes", required=True, help="two label ids, e.g. 3,17")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("train", help="train a recommender on a dataset CSV")
    _add_table_flags(p)
    _add_sampling_flags(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=None, help="default: 15 (cases 1, 3), 22 (case 2)")
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--embedding-dim", type=int, default=16)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--buckets", type=int, default=DEFAULT_BUCKETS, help="log buckets per magnitude feature")
    p.add_argument("--baseline", action="store_true", help="plain MLP on z-scored raw features")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict the optimal configuration for one query")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="comma-separated raw features")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy and GeoMean normalized performance on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--case", type=int, choices=(1, 2, 3), default=None)
    p.add_argument("--report", required=True, help="report JSON path")
    p.add_argument("--hist", default=None, help="predicted-vs-actual CSV (default: <report>.hist.csv)")
    p.add_argument("--ratios", default=None, help="optional per-sample ratio CSV")
    p.add_argument("--no-verify", action="store_true", help="skip oracle re-check of labels")
    p.set_defaults(func=cmd_eval)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    # Config values become defaults, so explicit flags still win on re-parse.
    for action in parser._subparsers._group_actions:
        for sub in action.choices.values():
            sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = _apply_config(parser, argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return exc.code if isinstance(exc.code, int) else 1
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except (UsageError, ParameterError, ShapeError, EncodingError, InfeasibleError,
            SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, DataError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
