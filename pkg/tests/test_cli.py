import csv
import json

import pytest

from walkerstage.cli import main
from walkerstage.evaluation import load_reports
from walkerstage.features import load_matrix_csv
from walkerstage.forest import load_model
from walkerstage.selection import SelectionResult

COUNTS = "HC=3,1=3,2=3,2.5=3,3=3,4=3"
TIMING_KEYS = ("mean_execution_time_s", "mean_selection_time_s")


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("synth", "--out", d / "cohort", "--seed", 2, "--counts", COUNTS) == 0
    assert run("extract", "--manifest", d / "cohort/manifest.json", "--out", d / "features.csv",
               "--imputation-report", d / "imputed.json") == 0
    for method in ("anova", "pca", "rf"):
        extra = ["--loadings-csv", d / "loadings.csv"] if method == "pca" else ["--trees", 20]
        assert run("select", "--matrix", d / "features.csv", "--method", method,
                   "--out", d / f"{method}.json", *extra) == 0
    assert run("train", "--matrix", d / "features.csv", "--selection", d / "anova.json",
               "--trees", 15, "--out", d / "model.json") == 0
    assert run("predict", "--model", d / "model.json", "--selection", d / "anova.json",
               "--matrix", d / "features.csv", "--out", d / "pred.csv") == 0
    assert run("evaluate", "--matrix", d / "features.csv", "--k", 3, "--trees", 15,
               "--out-json", d / "eval.json", "--out-csv", d / "eval.csv") == 0
    assert run("report", "--reports", d / "eval.json", "--out-dir", d / "report",
               "--anova", d / "anova.json", "--rf", d / "rf.json") == 0
    return d


def test_every_artifact_reloads(pipeline):
    d = pipeline
    matrix = load_matrix_csv(d / "features.csv")
    assert matrix.values.shape == (18, 211)
    for method in ("anova", "pca", "rf"):
        sel = SelectionResult.from_json(json.loads((d / f"{method}.json").read_text()))
        assert sel.transform(matrix.values).shape[0] == 18
    model = load_model(d / "model.json")
    assert len(model.trees) == 15
    with open(d / "pred.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["subject_id"] for r in rows] == list(matrix.subject_ids)
    reports = load_reports(d / "eval.json")
    assert [r.feature_set.value for r in reports] == ["Full", "AnovaSelected", "RfSelected", "Pca"]
    cat = json.loads((d / "report/category_report.json").read_text())
    assert set(cat["counts"]) == {"Anova", "RfEmbedded"}
    for name in ("table1.csv", "plot_accuracy.csv", "plot_confusion.csv", "plot_categories.csv",
                 "confusion_Full.csv", "confusion_Pca.csv"):
        assert (d / "report" / name).stat().st_size > 0
    assert json.loads((d / "imputed.json").read_text()) == {"imputed_cells": {}}


def test_table1_has_four_rows(pipeline):
    lines = (pipeline / "report/table1.csv").read_text().splitlines()
    assert len(lines) == 5


def test_evaluate_twice_differs_only_in_timing(pipeline, tmp_path):
    docs = []
    for i in range(2):
        assert run("evaluate", "--matrix", pipeline / "features.csv", "--feature-set", "full,pca",
                   "--k", 3, "--trees", 10, "--seed", 4, "--out-json", tmp_path / f"e{i}.json") == 0
        doc = json.loads((tmp_path / f"e{i}.json").read_text())
        for r in doc["reports"]:
            for key in TIMING_KEYS:
                r.pop(key)
        docs.append(doc)
    assert docs[0] == docs[1]


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    assert "walkerstage" in out and "catalog v1" in out


def test_missing_catalog(pipeline, tmp_path, capsys):
    missing = tmp_path / "nope.json"
    code = run("extract", "--manifest", pipeline / "cohort/manifest.json", "--out", tmp_path / "x.csv",
               "--catalog", missing)
    assert code == 1
    err = capsys.readouterr().err.strip()
    assert err == f"error: catalog not found: {missing}"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["select", "--matrix", "m.csv", "--method", "lasso", "--out", "o.json"])
    assert info.value.code == 2
    assert run("evaluate", "--matrix", "m.csv", "--feature-set", "lasso", "--out-json", "o.json") == 2


def test_out_of_range_config_value(pipeline, tmp_path, capsys):
    code = run("select", "--matrix", pipeline / "features.csv", "--method", "anova", "--alpha", 1.5,
               "--out", tmp_path / "a.json")
    assert code == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and err.startswith("error: config: selection.alpha")


def test_config_file_and_flag_precedence(pipeline, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"forest": {"n_trees": 4, "max_depth": 2}, "evaluation": {"seed": 9}}))
    assert run("train", "--config", cfg, "--matrix", pipeline / "features.csv", "--out", tmp_path / "a.json") == 0
    assert run("train", "--config", cfg, "--matrix", pipeline / "features.csv", "--trees", 6,
               "--out", tmp_path / "b.json") == 0
    a, b = load_model(tmp_path / "a.json"), load_model(tmp_path / "b.json")
    assert len(a.trees) == 4 and len(b.trees) == 6
    assert a.params.max_depth == 2 and a.params.seed == 9
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("train", "--config", cfg, "--matrix", pipeline / "features.csv", "--out", tmp_path / "c.json") == 1


def test_subject_error_names_subject(pipeline, tmp_path, capsys):
    import shutil
    cohort = tmp_path / "cohort"
    shutil.copytree(pipeline / "cohort", cohort)
    manifest = json.loads((cohort / "manifest.json").read_text())
    victim = manifest["subjects"][2]
    path = cohort / victim["file"]
    lines = path.read_text().splitlines()
    lines[40] = ",".join(["nan"] * 8)
    path.write_text("\n".join(lines) + "\n")
    code = run("extract", "--manifest", cohort / "manifest.json", "--out", tmp_path / "f.csv")
    assert code == 1
    err = capsys.readouterr().err
    assert victim["id"] in err and "non-finite" in err
    assert not (tmp_path / "f.csv").exists()


def test_predict_width_mismatch(pipeline, tmp_path, capsys):
    code = run("predict", "--model", pipeline / "model.json", "--matrix", pipeline / "features.csv",
               "--out", tmp_path / "p.csv")
    assert code == 1
    assert "expects" in capsys.readouterr().err
