"""Command line front end: ``attnot simulate | analyze | real-data | dump-config``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace

import numpy as np

from .analysis import TrajectoryRecord, compute_report
from .errors import AttnOTError
from .experiments import (
    PIPELINES,
    default_config,
    dump_config,
    format_summary,
    load_config,
    read_trajectory,
    run_experiment,
    run_real_data,
)
from .nn import load_classifier
from .otclassifier import OTClassifier


def _separations(text):
    try:
        vals = tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot read separations {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("need at least one separation")
    return vals


def _add_study_args(p):
    p.add_argument("--pipeline", choices=PIPELINES, default=None)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--separations", type=_separations, default=None, help="comma separated, e.g. 2,4,6,8")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="training epochs of the chosen pipeline")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rotation", type=float, default=None, help="dummy rotation in degrees (pretrained pipeline)")
    p.add_argument("--n", type=int, default=None, help="instances per dataset")
    p.add_argument("--t", type=int, default=None, help="timesteps per instance")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--config", default=None, help="YAML configuration file")
    p.add_argument("--paper-scale", dest="full_scale", action="store_true", help="full protocol: 90x20 data, 200 epochs, 100 repetitions")


def build_config(args):
    """Defaults, then the config file, then explicit flags."""
    pipeline = args.pipeline or "transformer"
    classes = args.classes or 2
    cfg = default_config(pipeline, classes, full_scale=args.full_scale)
    if args.config:
        cfg = load_config(args.config, base=cfg)
        if args.classes and args.classes != cfg.classes:
            cfg = replace(cfg, classes=args.classes, train=replace(cfg.train, blocks=max(1, args.classes - 1)))
    top = {}
    for name in ("pipeline", "classes", "separations", "reps", "seed", "rotation", "n", "t", "workers"):
        v = getattr(args, name)
        if v is not None:
            top[name] = v
    cfg = replace(cfg, **top)
    if args.epochs is not None:
        if cfg.pipeline == "ot-model":
            cfg = replace(cfg, ot=replace(cfg.ot, mlp_epochs=args.epochs))
        else:
            cfg = replace(cfg, train=replace(cfg.train, epochs=args.epochs))
    return cfg


def cmd_simulate(args):
    cfg = build_config(args)

    def progress(o):
        if not args.quiet:
            print(f"separation {o.separation:g} rep {o.rep}: {o.status}", file=sys.stderr)

    result = run_experiment(cfg, out=args.out, progress=progress)
    print(format_summary(result.summary))
    failed = sum(o.status != "ok" for o in result.outcomes)
    if failed:
        print(f"{failed} repetition(s) failed; see reps.csv", file=sys.stderr)
    return 0


def cmd_analyze(args):
    trace = read_trajectory(args.trajectory, args.loss, args.best_epoch)
    record = TrajectoryRecord.from_trace(trace)
    k = int(trace.labels.max()) + 1
    if args.model:
        try:
            model = OTClassifier.load(args.model)
            probs, _ = model.predict_proba(trace.inputs)
        except AttnOTError:
            model, _ = load_classifier(args.model)
            probs, _ = model.predict_proba(trace.inputs)
    else:
        # without a model only the transport diagnostics are meaningful
        probs = np.full((*trace.inputs.shape[:2], k), math.nan)
    report = compute_report(record, probs, trace.labels)
    row = report.as_dict(include_time=False)
    if not args.model:
        for key in row:
            if key.startswith("accuracy") or key.startswith("recall"):
                row[key] = math.nan
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(list(row))
        w.writerow([repr(float(v)) for v in row.values()])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_real_data(args):
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    rows = run_real_data(
        args.csv,
        scheme=args.scheme,
        models=models,
        seed=args.seed,
        group_rows=args.group_rows,
        out=args.out,
        label_column=args.label_column,
    )
    cols = list(rows[0])
    print(",".join(cols))
    for r in rows:
        print(",".join(r[c] if c == "model" else f"{r[c]:.4f}" for c in cols))
    return 0


def cmd_dump_config(args):
    cfg = build_config(args)
    text = dump_config(cfg, args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def make_parser():
    parser = argparse.ArgumentParser(prog="attnot", description="Optimal-transport diagnostics of self-attention.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="repeated Gaussian-cloud simulation study")
    _add_study_args(p)
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="recompute metrics from a dumped trajectory")
    p.add_argument("trajectory", help="trajectory.csv")
    p.add_argument("--loss", default=None, help="loss.csv (defines the best epoch)")
    p.add_argument("--best-epoch", type=int, default=None)
    p.add_argument("--model", default=None, help="model.ckpt for accuracy and recall")
    p.add_argument("--out", default=None, help="write the report row here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("real-data", help="train/test comparison on a labelled feature table")
    p.add_argument("csv")
    p.add_argument("--scheme", choices=("binary", "three", "four"), default="binary")
    p.add_argument("--models", default="ot-model,transformer", help="comma separated: ot-model, transformer, pretrained")
    p.add_argument("--group-rows", type=int, default=1, help="consecutive same-label rows per instance")
    p.add_argument("--label-column", default="y")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_real_data)

    p = sub.add_parser("dump-config", help="print the effective configuration as YAML")
    _add_study_args(p)
    p.add_argument("--out", default=None, help="write to this file instead of stdout")
    p.set_defaults(func=cmd_dump_config)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AttnOTError, OSError) as exc:
        print(f"attnot: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
