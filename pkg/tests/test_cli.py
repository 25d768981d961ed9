import csv

import numpy as np
import pytest

from attnot.cli import build_config, main, make_parser

FAST = ["--reps", "1", "--separations", "8", "--n", "6", "--t", "3", "--epochs", "3", "--quiet"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_and_analyze(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", *FAST, "--out", str(out)]) == 0
    assert "matching" in capsys.readouterr().out
    rows = read_rows(out / "reps.csv")
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    sep = out / "sep_8"
    report = tmp_path / "report.csv"
    args = ["analyze", str(sep / "trajectory.csv"), "--loss", str(sep / "loss.csv"), "--model", str(sep / "model.ckpt")]
    assert main([*args, "--out", str(report)]) == 0
    again = read_rows(report)[0]
    for key in ("matching", "wasserstein_distance", "transformer_cost", "efficiency", "accuracy_pointwise"):
        assert float(again[key]) == pytest.approx(float(rows[0][key]), abs=1e-9), key


def test_analyze_without_model_leaves_accuracy_missing(tmp_path, capsys):
    out = tmp_path / "run"
    main(["simulate", *FAST, "--out", str(out)])
    capsys.readouterr()
    assert main(["analyze", str(out / "sep_8" / "trajectory.csv"), "--best-epoch", "2"]) == 0
    header, values = capsys.readouterr().out.strip().splitlines()
    row = dict(zip(header.split(","), values.split(",")))
    assert np.isnan(float(row["accuracy_pointwise"])) and row["best_epoch"] == "2.0"


def test_simulate_ot_model_and_pretrained(tmp_path):
    assert main(["simulate", "--pipeline", "ot-model", *FAST, "--out", str(tmp_path / "ot")]) == 0
    assert (tmp_path / "ot" / "sep_8" / "model.ckpt").exists()
    assert not (tmp_path / "ot" / "sep_8" / "trajectory.csv").exists()
    assert main(["simulate", "--pipeline", "pretrained", "--rotation", "180", *FAST, "--out", str(tmp_path / "pre")]) == 0
    assert "rotation: 180.0" in (tmp_path / "pre" / "config.yaml").read_text()


def test_dump_config_and_layering(tmp_path, capsys):
    assert main(["dump-config", "--classes", "3", "--epochs", "40"]) == 0
    text = capsys.readouterr().out
    assert "classes: 3" in text and "Epochs: 40" in text and "Transformer blocks: 2" in text
    path = tmp_path / "c.yaml"
    path.write_text("reps: 4\ntransformer:\n  Epochs: 9\n")
    cfg = build_config(make_parser().parse_args(["simulate", "--config", str(path), "--reps", "2"]))
    assert cfg.reps == 2 and cfg.train.epochs == 9
    cfg = build_config(make_parser().parse_args(["simulate", "--paper-scale"]))
    assert (cfg.n, cfg.t, cfg.reps, cfg.train.epochs) == (90, 20, 100, 200)
    cfg = build_config(make_parser().parse_args(["simulate", "--pipeline", "ot-model", "--epochs", "7"]))
    assert cfg.ot.mlp_epochs == 7


def test_real_data_command(tmp_path, capsys):
    rng = np.random.default_rng(0)
    y = rng.integers(0, 4, 120)
    x = rng.normal(size=(120, 3)) + y[:, None]
    path = tmp_path / "d.csv"
    path.write_text("a,b,c,y\n" + "".join(f"{r[0]},{r[1]},{r[2]},{v}\n" for r, v in zip(x, y)))
    assert main(["real-data", str(path), "--models", "ot-model", "--out", str(tmp_path / "out")]) == 0
    assert capsys.readouterr().out.startswith("model,accuracy")
    assert (tmp_path / "out" / "real_data.csv").exists()


def test_errors_exit_with_status_two(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,0\n2,x\n")
    assert main(["real-data", str(bad)]) == 2
    assert "bad.csv:3" in capsys.readouterr().err
    assert main(["simulate", "--reps", "0", "--quiet"]) == 2
    with pytest.raises(SystemExit):
        main(["simulate", "--separations", "a,b"])
