"""Repeated simulation studies, real-data runs and their file outputs.

Three simulation pipelines share one protocol: for every separation and
repetition, sample a Gaussian-cloud dataset, standardize it, train, and
compute a :class:`~attnot.analysis.MetricsReport` on the training data.

``transformer``
    joint training of encoder and head, trajectory recorded every epoch.
``pretrained``
    train the whole model on (possibly rotated) dummy data, freeze the head,
    then train the encoder on the real data from that starting point.
``ot-model``
    the transport classifier of :mod:`attnot.otclassifier`.

Per-repetition results are written to ``reps.csv`` (deterministic given the
config), wall-clock times to ``timings.csv`` and the median/quartile table
to ``summary.csv``. Repetition 0 of every separation also leaves its
trajectory, loss curve and model checkpoint under ``sep_<s>/``.
"""

from __future__ import annotations

import csv
import math
import multiprocessing as mp
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .analysis import REPORT_COLUMNS, TrajectoryRecord, compute_report
from .data import (
    ClassLayout,
    DatasetTensor,
    DummyLayout,
    make_dummy_dataset,
    make_layout,
    rng_for,
    sample_dataset,
    standardize,
)
from .errors import AttnOTError, ParameterError, ParseError
from .nn import TrainConfig, TrainingTrace, freeze_mlp, save_classifier, train_full_batch
from .ot import GaussianSpec
from .otclassifier import OTClassifier, OTFitConfig, default_dummy_means

__all__ = [
    "PIPELINES",
    "ExperimentConfig",
    "ExperimentResult",
    "default_config",
    "load_config",
    "dump_config",
    "run_experiment",
    "run_pretrained",
    "run_repetition",
    "summarize",
    "quartiles",
    "dump_trajectory",
    "read_trajectory",
    "ingest_real_csv",
    "real_data_config",
    "run_real_data",
    "format_summary",
]

PIPELINES = ("transformer", "pretrained", "ot-model")

DESK_SCALE = {"n": 30, "t": 10, "epochs": 60, "reps": 20}
FULL_SCALE = {"n": 90, "t": 20, "epochs": 200, "reps": 100}

# Parameter names as they appear in the training-parameter tables.
_TRAIN_TABLE = {
    "epochs": "Epochs",
    "blocks": "Transformer blocks",
    "heads": "Number of heads",
    "head_dim": "Head dimension",
    "ff_dim": "Feedforward dimension (SA)",
    "mlp_units": "MLP units",
    "sa_dropout": "SA Dropout",
    "mlp_dropout": "MLP Dropout",
    "learning_rate": "Learning rate",
    "batch_size": "Batch size (NN)",
}
_OT_TABLE = {
    "mlp_epochs": "MLP epochs",
    "mlp_units": "MLP units",
    "dropout": "Dropout",
    "learning_rate": "Learning rate",
    "batch_size": "Batch size (NN)",
    "ot_batch_size": "Batch size (OT)",
}
_TRAIN_ALIASES = {v.lower(): k for k, v in _TRAIN_TABLE.items()} | {"dropout (sa)": "sa_dropout", "dropout (mlp)": "mlp_dropout"}
_OT_ALIASES = {v.lower(): k for k, v in _OT_TABLE.items()} | {"epochs": "mlp_epochs", "dropout (mlp)": "dropout"}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Everything a simulation study needs. ``train`` drives the transformer
    pipelines (including both phases of pretraining), ``ot`` the OT model."""

    pipeline: str = "transformer"
    classes: int = 2
    separations: tuple = (2.0, 4.0, 6.0, 8.0)
    reps: int = DESK_SCALE["reps"]
    n: int = DESK_SCALE["n"]
    t: int = DESK_SCALE["t"]
    p: int = 2
    seed: int = 0
    rotation: float = 0.0
    workers: int = 1
    save_traces: bool = True
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=DESK_SCALE["epochs"]))
    ot: OTFitConfig = field(default_factory=OTFitConfig)

    def __post_init__(self):
        self.separations = tuple(float(s) for s in np.atleast_1d(self.separations))
        if self.pipeline not in PIPELINES:
            raise ParameterError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        if self.reps < 1:
            raise ParameterError("reps must be >= 1")
        if not self.separations or min(self.separations) <= 0:
            raise ParameterError("separations must be positive")
        if self.classes < 2:
            raise ParameterError("need at least two classes")
        if self.n % self.classes:
            raise ParameterError(f"n={self.n} is not divisible by the class count {self.classes}")
        if self.t < 1 or self.p < 2:
            raise ParameterError("need t >= 1 and p >= 2")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")
        self.rotation = float(self.rotation) % 360.0

    def to_dict(self, table_names=True):
        train = self.train.to_dict()
        ot = self.ot.to_dict()
        if table_names:
            train = {_TRAIN_TABLE.get(k, k): v for k, v in train.items()}
            ot = {_OT_TABLE.get(k, k): v for k, v in ot.items()}
        return {
            "pipeline": self.pipeline,
            "classes": self.classes,
            "separations": list(self.separations),
            "reps": self.reps,
            "n": self.n,
            "t": self.t,
            "p": self.p,
            "seed": self.seed,
            "rotation": self.rotation,
            "workers": self.workers,
            "save_traces": self.save_traces,
            "transformer": train,
            "ot_model": ot,
        }


def _parse_units(v):
    if isinstance(v, str):
        parts = [s for s in re.split(r"[,\s()\[\]]+", v) if s]
        try:
            return tuple(int(s) for s in parts)
        except ValueError:
            raise ParameterError(f"cannot read unit list {v!r}") from None
    return tuple(int(u) for u in np.atleast_1d(v))


def _normalise_section(d, aliases, what):
    out = {}
    for key, value in (d or {}).items():
        k = str(key).strip().lower()
        name = aliases.get(k, k.replace(" ", "_"))
        if name in out:
            raise ParameterError(f"{what} parameter {key!r} given twice")
        out[name] = _parse_units(value) if name == "mlp_units" else value
    return out


def default_config(pipeline="transformer", classes=2, full_scale=False, **overrides):
    """Desk-scale (or full-scale) defaults for a pipeline.

    Encoder depth follows the tables: one block for two classes, two for
    three. ``overrides`` replace top-level :class:`ExperimentConfig` fields.
    """
    scale = FULL_SCALE if full_scale else DESK_SCALE
    train = TrainConfig(epochs=scale["epochs"], blocks=max(1, classes - 1))
    cfg = dict(pipeline=pipeline, classes=classes, reps=scale["reps"], n=scale["n"], t=scale["t"], train=train)
    cfg.update(overrides)
    return ExperimentConfig(**cfg)


def config_from_dict(d, base=None):
    """Build a config from a (YAML-loaded) mapping, layered over ``base``."""
    d = dict(d or {})
    base = base or default_config(d.get("pipeline", "transformer"), int(d.get("classes", 2)))
    train_over = _normalise_section(d.pop("transformer", None), _TRAIN_ALIASES, "transformer")
    ot_over = _normalise_section(d.pop("ot_model", None), _OT_ALIASES, "OT model")
    train = TrainConfig.from_dict({**base.train.to_dict(), **train_over})
    ot = OTFitConfig.from_dict({**base.ot.to_dict(), **ot_over})
    known = set(ExperimentConfig.__dataclass_fields__) - {"train", "ot"}
    unknown = set(d) - known
    if unknown:
        raise ParameterError(f"unknown configuration keys: {sorted(unknown)}")
    top = {k: getattr(base, k) for k in known}
    top.update(d)
    return ExperimentConfig(train=train, ot=ot, **top)


def load_config(path, base=None):
    try:
        with open(path, encoding="utf-8") as fh:
            d = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(str(exc).splitlines()[0], path, None if mark is None else mark.line + 1) from None
    if d is not None and not isinstance(d, dict):
        raise ParseError("configuration must be a mapping", path, 1)
    return config_from_dict(d, base)


def dump_config(cfg, path=None):
    """YAML text of ``cfg`` with table-style parameter names; written to ``path`` if given."""
    text = yaml.safe_dump(cfg.to_dict(), sort_keys=False, allow_unicode=True)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# one repetition
# ---------------------------------------------------------------------------


@dataclass
class RepOutcome:
    separation: float
    rep: int
    seed: int
    status: str
    metrics: dict
    elapsed_s: float
    trace: TrainingTrace = None
    model: object = None


def _simulated_data(cfg, separation, seed):
    layout = make_layout(cfg.classes, separation, cfg.p)
    raw = sample_dataset(layout, cfg.n, cfg.t, seed)
    data, scaler = standardize(raw)
    return layout, data, scaler


def _transformer(cfg, data, seed):
    model, trace = train_full_batch(data, replace(cfg.train, seed=seed))
    return model, trace


def run_pretrained_model(cfg, layout, data, scaler, seed):
    """Three phases: fit on dummy data, freeze the head, train the encoder on ``data``.

    Dummy data come from ``DummyLayout(layout, cfg.rotation)`` and are put
    through the real data's scaler so both share one coordinate frame.
    """
    dummy_raw = make_dummy_dataset(DummyLayout(layout, cfg.rotation), cfg.n, cfg.t, (seed, 1))
    dummy = replace(dummy_raw, data=scaler.transform(dummy_raw.data))
    tc = replace(cfg.train, seed=seed)
    pre, _ = train_full_batch(dummy, tc, record_trace=False)
    model, trace = train_full_batch(data, tc, frozen=freeze_mlp(pre), model=pre)
    return model, trace


def run_repetition(cfg, separation, rep):
    """Run one (separation, repetition) cell; failures become an error row."""
    seed = cfg.seed + rep
    keep = cfg.save_traces and rep == 0
    try:
        layout, data, scaler = _simulated_data(cfg, separation, seed)
        start = time.perf_counter()
        trace = None
        if cfg.pipeline == "ot-model":
            model = OTClassifier(replace(cfg.ot, seed=seed)).fit(data, scaler)
            probs, _ = model.predict_proba(data.data)
            report = compute_report(None, probs, data.labels)
        else:
            if cfg.pipeline == "transformer":
                model, trace = _transformer(cfg, data, seed)
            else:
                model, trace = run_pretrained_model(cfg, layout, data, scaler, seed)
            probs, _ = model.predict_proba(data.data)
            report = compute_report(TrajectoryRecord.from_trace(trace), probs, data.labels)
        elapsed = time.perf_counter() - start
    except (AttnOTError, ArithmeticError, np.linalg.LinAlgError) as exc:
        msg = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
        return RepOutcome(separation, rep, seed, msg, {}, math.nan)
    metrics = report.as_dict(include_time=False)
    metrics["degenerate"] = int(report.degenerate)
    return RepOutcome(
        separation,
        rep,
        seed,
        "ok",
        metrics,
        elapsed,
        trace if keep else None,
        model if keep else None,
    )


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def quartiles(values):
    """``(median, q1, q3)`` of the finite entries by linear interpolation between order statistics."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return math.nan, math.nan, math.nan
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return float(med), float(q1), float(q3)


def _metric_columns(k):
    return list(REPORT_COLUMNS) + [f"recall_class_{j}" for j in range(k)]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    outcomes: list
    summary: dict

    def median(self, metric, separation):
        return self.summary[metric][float(separation)]["median"]


def summarize(outcomes, separations, n_classes):
    """``{metric: {separation: {"median", "q1", "q3", "n", "failed"}}}`` over successful reps."""
    out = {}
    for metric in _metric_columns(n_classes):
        per = {}
        for s in separations:
            cell = [o for o in outcomes if o.separation == s]
            ok = [o for o in cell if o.status == "ok"]
            if metric == "computational_time_s":
                vals = [o.elapsed_s for o in ok]
            else:
                vals = [o.metrics.get(metric, math.nan) for o in ok]
            med, q1, q3 = quartiles(vals)
            n_finite = int(np.sum(np.isfinite(np.asarray(vals, dtype=float)))) if vals else 0
            per[float(s)] = {"median": med, "q1": q1, "q3": q3, "n": n_finite, "failed": len(cell) - len(ok)}
        out[metric] = per
    return out


def format_summary(summary, digits=3):
    """Plain-text table, one row per metric, ``median (q1-q3)`` per separation."""
    metrics = list(summary)
    seps = list(next(iter(summary.values())))
    head = ["separation"] + [f"{s:g}" for s in seps]
    lines = []
    rows = []
    for m in metrics:
        cells = []
        for s in seps:
            c = summary[m][s]
            if math.isnan(c["median"]):
                cells.append("-")
            else:
                cells.append(f"{c['median']:.{digits}f} ({c['q1']:.{digits}f}-{c['q3']:.{digits}f})")
        rows.append([m] + cells)
    widths = [max(len(r[j]) for r in [head] + rows) for j in range(len(head))]
    for r in [head] + rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# file outputs
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_reps_csv(path, outcomes, n_classes):
    cols = [c for c in _metric_columns(n_classes) if c != "computational_time_s"] + ["degenerate"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["separation", "rep", "seed", "status", *cols])
        for o in outcomes:
            vals = [_fmt(o.metrics[c]) if c in o.metrics else "" for c in cols]
            w.writerow([_fmt(o.separation), o.rep, o.seed, o.status, *vals])


def write_timings_csv(path, outcomes):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["separation", "rep", "computational_time_s"])
        for o in outcomes:
            w.writerow([_fmt(o.separation), o.rep, "" if math.isnan(o.elapsed_s) else repr(o.elapsed_s)])


def write_summary_csv(path, summary):
    """Rows are (metric, statistic), columns one per separation."""
    seps = list(next(iter(summary.values())))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "statistic", *[f"{s:g}" for s in seps]])
        for metric, per in summary.items():
            for stat in ("median", "q1", "q3", "n", "failed"):
                w.writerow([metric, stat, *[_fmt(per[s][stat]) for s in seps]])


def read_summary_csv(path):
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        seps = [float(s) for s in header[2:]]
        for row in reader:
            metric, stat = row[0], row[1]
            for s, v in zip(seps, row[2:]):
                out.setdefault(metric, {}).setdefault(s, {})[stat] = float(v)
    return out


def dump_trajectory(trace, path, loss_path=None):
    """Long-format trajectory CSV, epochs 0 (scaled input) to E.

    Columns ``epoch,instance,timestep,class,x1..xp``; values are written with
    17 significant digits, so re-reading is exact. ``loss_path`` receives
    ``epoch,loss`` for epochs 1..E.
    """
    x = trace.inputs
    n, t, p = x.shape
    inst, step = np.meshgrid(np.arange(n), np.arange(t), indexing="ij")
    ids = np.column_stack([inst.ravel(), step.ravel(), np.repeat(trace.labels, t)])
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(["epoch", "instance", "timestep", "class", *[f"x{j + 1}" for j in range(p)]]) + "\n")
            for e in range(trace.epochs + 1):
                pts = trace.projection(e).reshape(-1, p)
                block = np.column_stack([np.full(n * t, e), ids])
                lines = [
                    ",".join(map(str, head)) + "," + ",".join("%.17g" % v for v in row)
                    for head, row in zip(block.tolist(), pts)
                ]
                fh.write("\n".join(lines) + "\n")
        if loss_path is not None:
            with open(loss_path, "w", encoding="utf-8") as fh:
                fh.write("epoch,loss\n")
                for e, v in enumerate(trace.loss, start=1):
                    fh.write(f"{e},{v:.17g}\n")
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {exc.filename or path}: {exc.strerror}") from exc


def read_trajectory(path, loss_path=None, best_epoch=None):
    """Inverse of :func:`dump_trajectory`. Needs ``loss_path`` or ``best_epoch``."""
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header[:4] != ["epoch", "instance", "timestep", "class"] or len(header) < 5:
        raise ParseError("expected header epoch,instance,timestep,class,x1..xp", path, 1)
    p = len(header) - 4
    if raw.shape[1] != p + 4:
        raise ParseError(f"expected {p + 4} columns", path)
    epoch = raw[:, 0].astype(int)
    inst = raw[:, 1].astype(int)
    step = raw[:, 2].astype(int)
    E, n, t = epoch.max(), inst.max() + 1, step.max() + 1
    if raw.shape[0] != (E + 1) * n * t:
        raise ParseError(f"{raw.shape[0]} rows do not form {E + 1} epochs of {n}x{t} points", path)
    cube = np.empty((E + 1, n, t, p))
    cube[epoch, inst, step] = raw[:, 4:]
    labels = np.empty(n, dtype=np.int64)
    labels[inst] = raw[:, 3].astype(int)
    if loss_path is not None:
        loss = np.loadtxt(loss_path, delimiter=",", skiprows=1, ndmin=2)[:, 1]
        if loss.size != E:
            raise ParseError(f"loss file has {loss.size} epochs, trajectory has {E}", loss_path)
    else:
        if best_epoch is None:
            raise ParameterError("need a loss file or an explicit best epoch")
        loss = np.full(E, np.nan)
    return TrainingTrace(
        inputs=cube[0],
        labels=labels,
        projections=cube[1:],
        loss=loss,
        best_epoch=None if best_epoch is None else int(best_epoch),
    )


def _write_artifacts(out, o):
    d = os.path.join(out, f"sep_{o.separation:g}")
    os.makedirs(d, exist_ok=True)
    if o.trace is not None:
        dump_trajectory(o.trace, os.path.join(d, "trajectory.csv"), os.path.join(d, "loss.csv"))
    if o.model is not None:
        path = os.path.join(d, "model.ckpt")
        if isinstance(o.model, OTClassifier):
            o.model.save(path)
        else:
            save_classifier(path, o.model, {"best_epoch": int(o.trace.best_epoch)})


def _run_cell(args):
    cfg, s, r = args
    return run_repetition(cfg, s, r)


def run_experiment(cfg, out=None, progress=None):
    """Run every separation x repetition and, if ``out`` is given, write all outputs.

    Repetitions run in a process pool when ``cfg.workers > 1``; results are
    collected and written by the calling process in (separation, rep) order.
    """
    jobs = [(cfg, s, r) for s in cfg.separations for r in range(cfg.reps)]
    if cfg.workers > 1:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
        with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=ctx) as pool:
            outcomes = []
            for o in pool.map(_run_cell, jobs):
                outcomes.append(o)
                if progress:
                    progress(o)
    else:
        outcomes = []
        for job in jobs:
            o = _run_cell(job)
            outcomes.append(o)
            if progress:
                progress(o)
    summary = summarize(outcomes, cfg.separations, cfg.classes)
    if out is not None:
        os.makedirs(out, exist_ok=True)
        write_reps_csv(os.path.join(out, "reps.csv"), outcomes, cfg.classes)
        write_timings_csv(os.path.join(out, "timings.csv"), outcomes)
        write_summary_csv(os.path.join(out, "summary.csv"), summary)
        dump_config(cfg, os.path.join(out, "config.yaml"))
        for o in outcomes:
            if o.trace is not None or o.model is not None:
                _write_artifacts(out, o)
    return ExperimentResult(cfg, outcomes, summary)


def run_pretrained(cfg, out=None, progress=None):
    """:func:`run_experiment` with the pipeline forced to ``pretrained``."""
    return run_experiment(replace(cfg, pipeline="pretrained"), out, progress)


# ---------------------------------------------------------------------------
# real data
# ---------------------------------------------------------------------------

SCHEMES = ("binary", "three", "four")


def _read_labelled_rows(path, label_column):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file", path, 1)
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ParseError(f"missing label column {label_column!r}", path, 1)
        li = header.index(label_column)
        feats = [j for j in range(len(header)) if j != li]
        if not feats:
            raise ParseError("no feature columns", path, 1)
        xs, ys, lines = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
            try:
                y = int(row[li])
            except ValueError:
                raise ParseError(f"label {row[li]!r} is not an integer", path, lineno) from None
            if not 0 <= y <= 3:
                raise ParseError(f"label {y} outside 0..3", path, lineno)
            try:
                xs.append([float(row[j]) for j in feats])
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            ys.append(y)
            lines.append(lineno)
    if not ys:
        raise ParseError("no data rows", path, 2)
    return np.asarray(xs), np.asarray(ys), [header[j] for j in feats]


def _apply_scheme(x, y, scheme):
    if scheme == "binary":
        return x, (y > 0).astype(np.int64), 2
    if scheme == "three":
        keep = y != 3
        return x[keep], y[keep], 3
    if scheme == "four":
        return x, y, 4
    raise ParameterError(f"label scheme must be one of {SCHEMES}, got {scheme!r}")


def _group_runs(x, y, t):
    """Cut runs of consecutive equal labels into instances of ``t`` rows; partial tails are dropped."""
    groups, labels = [], []
    start = 0
    for i in range(1, len(y) + 1):
        if i == len(y) or y[i] != y[start]:
            for g in range(start, i - t + 1, t):
                groups.append(x[g : g + t])
                labels.append(y[start])
            start = i
    if not groups:
        raise ParameterError(f"no run of {t} consecutive same-label rows")
    return np.stack(groups), np.asarray(labels)


def stratified_split(labels, test_fraction, seed):
    """Per-class shuffled split; returns ``(train_idx, test_idx)`` sorted."""
    rng = rng_for(seed, 5)
    train, test = [], []
    for k in np.unique(labels):
        idx = np.flatnonzero(labels == k)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(test_fraction * idx.size))
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return np.sort(np.asarray(train, dtype=np.int64)), np.sort(np.asarray(test, dtype=np.int64))


def ingest_real_csv(path, scheme="binary", seed=0, group_rows=1, label_column="y", test_fraction=0.2):
    """Read a labelled feature table and return ``(train, test, scaler, feature_names)``.

    Rows are relabelled by ``scheme`` (binary: y > 0 -> 1; three: drop y = 3;
    four: keep all), grouped into instances of ``group_rows`` consecutive
    same-label rows, split 80/20 per class, and standardized with
    train-set statistics.
    """
    if group_rows < 1:
        raise ParameterError("group_rows must be >= 1")
    if not 0.0 < test_fraction < 1.0:
        raise ParameterError("test_fraction must lie strictly between 0 and 1")
    x, y, names = _read_labelled_rows(path, label_column)
    x, y, k = _apply_scheme(x, y, scheme)
    cube, labels = _group_runs(x, y, group_rows)
    tr, te = stratified_split(labels, test_fraction, seed)
    train, scaler = standardize(DatasetTensor(cube[tr], labels[tr], k))
    test, _ = standardize(DatasetTensor(cube[te], labels[te], k), scaler)
    return train, test, scaler, names


def real_data_config(n_labels, seed=0):
    """Transformer and OT-model settings for the real-data comparison."""
    train = TrainConfig(
        epochs=100,
        blocks=max(1, n_labels - 1),
        heads=10,
        head_dim=64,
        ff_dim=32,
        mlp_units=(32, 32),
        sa_dropout=0.1,
        mlp_dropout=0.1,
        learning_rate=0.001,
        batch_size=64,
        seed=seed,
    )
    ot = OTFitConfig(
        mlp_epochs=50,
        mlp_units=(32, 32),
        dropout=0.3,
        learning_rate=0.001,
        batch_size=64,
        ot_batch_size=50,
        seed=seed,
    )
    return train, ot


def run_real_data(path, scheme="binary", models=("ot-model", "transformer"), seed=0, group_rows=1,
                  out=None, train_config=None, ot_config=None, label_column="y"):
    """Fit each model on the training split and score it on the test split.

    Returns a list of dicts with ``model``, accuracy, per-class recall and
    wall-clock training time. With ``out`` the rows go to ``real_data.csv``
    and each fitted model to ``<model>.ckpt``.
    """
    train, test, scaler, _ = ingest_real_csv(path, scheme, seed, group_rows, label_column)
    k = train.n_classes
    dflt_train, dflt_ot = real_data_config(k, seed)
    train_cfg = train_config or dflt_train
    ot_cfg = ot_config or dflt_ot
    rows = []
    fitted = {}
    for name in models:
        start = time.perf_counter()
        if name == "ot-model":
            model = OTClassifier(ot_cfg).fit(train, scaler)
            elapsed = time.perf_counter() - start
            probs, _ = model.predict_proba(test.data)
        elif name in ("transformer", "pretrained"):
            if name == "pretrained":
                if k != 2:
                    raise ParameterError("the pretrained model is only defined for the binary scheme")
                means = default_dummy_means(k, train.shape[2], ot_cfg.dummy_separation)
                dummy = sample_dataset(
                    _layout_from_means(means),
                    train.shape[0] - train.shape[0] % k,
                    train.shape[1],
                    (seed, 1),
                )
                pre, _ = train_full_batch(dummy, train_cfg, record_trace=False)
                model, _ = train_full_batch(train, train_cfg, frozen=freeze_mlp(pre), model=pre, record_trace=False)
            else:
                model, _ = train_full_batch(train, train_cfg, record_trace=False)
            elapsed = time.perf_counter() - start
            probs, _ = model.predict_proba(test.data)
        else:
            raise ParameterError(f"unknown model {name!r}")
        report = compute_report(None, probs, test.labels, elapsed)
        row = {"model": name, "accuracy": report.accuracy_instancewise,
               "accuracy_pointwise": report.accuracy_pointwise, "computational_time_s": elapsed}
        for j, r in enumerate(report.recall):
            row[f"recall_class_{j}"] = float(r)
        rows.append(row)
        fitted[name] = model
    if out is not None:
        os.makedirs(out, exist_ok=True)
        cols = list(rows[0])
        with open(os.path.join(out, "real_data.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow([r[c] if c == "model" else _fmt(r[c]) for c in cols])
        for name, model in fitted.items():
            path_ck = os.path.join(out, f"{name}.ckpt")
            if isinstance(model, OTClassifier):
                model.save(path_ck)
            else:
                save_classifier(path_ck, model, {"scaler_means": scaler.means.tolist(), "scaler_sds": scaler.sds.tolist()})
    return rows


def _layout_from_means(means):
    p = means.shape[1]
    return ClassLayout(tuple(GaussianSpec(m, np.eye(p)) for m in means), float("nan"))
