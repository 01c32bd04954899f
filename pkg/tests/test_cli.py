import json

import pytest

from rangeboost.cli import main
from rangeboost.data_model import default_schema, load_csv


@pytest.fixture
def synth_csv(tmp_path):
    spec = {"n_products": 150, "seed": 5}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")
    data_path = tmp_path / "data.csv"
    assert main(["synth", "--spec", str(spec_path), "--out", str(data_path)]) == 0
    return data_path


def test_bins_show(capsys):
    assert main(["bins", "--show"]) == 0
    out = capsys.readouterr().out
    assert "0-50" in out
    assert "5000-10000" in out
    assert len(out.strip().splitlines()) == 8


def test_synth_writes_loadable_csv(synth_csv):
    table = load_csv(synth_csv, default_schema())
    assert table.n == 150


def test_train_and_predict_round_trip(tmp_path, synth_csv):
    config_path = tmp_path / "train.json"
    config_path.write_text(
        json.dumps({"target_mode": "binned_range", "model": {"n_trees": 10, "max_depth": 3}}),
        encoding="utf-8",
    )
    model_path = tmp_path / "model.json"
    assert (
        main(
            [
                "train",
                "--data",
                str(synth_csv),
                "--config",
                str(config_path),
                "--model-out",
                str(model_path),
            ]
        )
        == 0
    )
    document = json.loads(model_path.read_text(encoding="utf-8"))
    assert document["format_version"] == 1
    assert document["kind"] == "ensemble"
    assert len(document["trees"]) == 10
    assert "pipeline" in document and "schema" in document

    preds_path = tmp_path / "preds.csv"
    assert (
        main(["predict", "--model", str(model_path), "--data", str(synth_csv), "--out", str(preds_path)])
        == 0
    )
    lines = preds_path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "prediction"
    assert len(lines) == 151
    float(lines[1])


def test_predict_accepts_data_without_target(tmp_path, synth_csv):
    import csv

    model_path = tmp_path / "model.json"
    assert main(["train", "--data", str(synth_csv), "--model-out", str(model_path)]) == 0
    with synth_csv.open(newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    sales_idx = rows[0].index("Sales")
    no_target = tmp_path / "new.csv"
    with no_target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        for row in rows:
            writer.writerow([v for i, v in enumerate(row) if i != sales_idx])
    preds_path = tmp_path / "preds.csv"
    assert (
        main(["predict", "--model", str(model_path), "--data", str(no_target), "--out", str(preds_path)])
        == 0
    )


def test_compare_writes_reports(tmp_path, capsys):
    experiment = {
        "dataset": {"synthetic": {"n_products": 150, "seed": 5}},
        "target_mode": "binned_range",
        "models": [
            {"name": "XGBoost", "kind": "boosted_trees", "config": {"n_trees": 10, "max_depth": 3}},
            {"name": "Linear", "kind": "ols"},
        ],
    }
    exp_path = tmp_path / "exp.json"
    exp_path.write_text(json.dumps(experiment), encoding="utf-8")
    for suffix in (".txt", ".csv", ".json"):
        out_path = tmp_path / f"report{suffix}"
        assert main(["compare", "--experiment", str(exp_path), "--out", str(out_path)]) == 0
        assert out_path.exists()
    parsed = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert [r["model"] for r in parsed["rows"]] == ["XGBoost", "Linear"]
    out = capsys.readouterr().out
    assert "XGBoost" in out


def test_exit_code_2_on_config_errors(tmp_path, synth_csv):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json", encoding="utf-8")
    assert main(["compare", "--experiment", str(bad_json)]) == 2
    assert (
        main(
            [
                "train",
                "--data",
                str(synth_csv),
                "--config",
                str(bad_json),
                "--model-out",
                str(tmp_path / "m.json"),
            ]
        )
        == 2
    )
    exp = tmp_path / "exp.json"
    exp.write_text(
        json.dumps({"dataset": {"synthetic": {}}, "models": [{"kind": "mystery"}]}),
        encoding="utf-8",
    )
    assert main(["compare", "--experiment", str(exp)]) == 2


def test_exit_code_3_on_data_errors(tmp_path):
    assert (
        main(["train", "--data", str(tmp_path / "absent.csv"), "--model-out", str(tmp_path / "m.json")])
        == 3
    )
    short = tmp_path / "short.csv"
    short.write_text("Products,Brand\nmice,acme\n", encoding="utf-8")
    assert main(["train", "--data", str(short), "--model-out", str(tmp_path / "m.json")]) == 3


def test_exit_code_4_on_model_errors(tmp_path, synth_csv):
    broken = tmp_path / "model.json"
    broken.write_text("{not json", encoding="utf-8")
    assert (
        main(["predict", "--model", str(broken), "--data", str(synth_csv), "--out", str(tmp_path / "p.csv")])
        == 4
    )
    assert (
        main(
            [
                "predict",
                "--model",
                str(tmp_path / "missing.json"),
                "--data",
                str(synth_csv),
                "--out",
                str(tmp_path / "p.csv"),
            ]
        )
        == 4
    )
