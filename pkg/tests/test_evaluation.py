import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walkerstage.errors import KTooLarge
from walkerstage.evaluation import (
    EvaluationReport,
    FeatureSet,
    SelectionMode,
    category_report,
    confusion_csv_text,
    confusion_matrix,
    confusion_stats,
    evaluate,
    evaluate_all,
    kfold_split,
    load_reports,
    summary_csv_text,
    write_reports,
)
from walkerstage.features import default_catalog
from walkerstage.forest import ForestParams
from walkerstage.ingest import StageLabel
from walkerstage.selection import SelectionMethod, SelectionResult

COHORT_CLASS_SIZES = [19, 14, 13, 14, 13, 13]  # 86 subjects


def test_fold_sizes_for_86():
    y = np.repeat(np.arange(6), COHORT_CLASS_SIZES)
    folds = kfold_split(86, 5, y, seed=3)
    assert sorted(len(f) for f in folds) == [17, 17, 17, 17, 18]
    assert sorted(np.concatenate(folds).tolist()) == list(range(86))
    for cls in range(6):
        per = [np.sum(y[f] == cls) for f in folds]
        assert max(per) - min(per) <= 1


def test_leave_one_out_and_errors():
    folds = kfold_split(7, 7, seed=0, stratified=False)
    assert all(len(f) == 1 for f in folds)
    with pytest.raises(KTooLarge):
        kfold_split(4, 5)


def test_fold_seeding():
    a = kfold_split(50, 5, seed=1, stratified=False)
    b = kfold_split(50, 5, seed=1, stratified=False)
    c = kfold_split(50, 5, seed=2, stratified=False)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not all(np.array_equal(x, y) for x, y in zip(a, c))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 120), st.integers(2, 10), st.integers(0, 1000), st.integers(1, 6))
def test_folds_partition(n, k, seed, c):
    k = min(k, n)
    y = np.arange(n) % c
    for strat in (True, False):
        folds = kfold_split(n, k, y, seed, strat)
        assert len(folds) == k
        assert sorted(np.concatenate(folds).tolist()) == list(range(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1


def test_six_errors_among_86():
    y = np.repeat(np.arange(6), COHORT_CLASS_SIZES)
    pred = y.copy()
    wrong = [0, 20, 35, 50, 64, 80]
    for i in wrong:
        pred[i] = y[i] + 1 if y[i] < 5 else y[i] - 1
    overall, per_class, adjacency = confusion_stats(confusion_matrix(y, pred))
    assert overall == pytest.approx(6.98, abs=0.01)
    assert adjacency == 1.0


def test_per_class_rate_for_two_of_13():
    y = np.repeat(np.arange(6), COHORT_CLASS_SIZES)
    pred = y.copy()
    hy2 = np.flatnonzero(y == StageLabel.HY2)[:2]
    pred[hy2] = StageLabel.HY1
    _, per_class, _ = confusion_stats(confusion_matrix(y, pred))
    assert per_class[StageLabel.HY2] == pytest.approx(15.38, abs=0.01)


def test_perfect_and_distant_errors():
    y = np.arange(12) % 6
    overall, per_class, adjacency = confusion_stats(confusion_matrix(y, y))
    assert overall == 0 and adjacency == 1.0 and not per_class.any()
    pred = y.copy()
    pred[0] = 5
    pred[1] = 2
    assert confusion_stats(confusion_matrix(y, pred))[2] == pytest.approx(0.5)


def test_confusion_csv():
    text = confusion_csv_text(np.eye(6, dtype=int))
    assert text.splitlines()[0] == "true\\predicted,HC,1,2,2.5,3,4"


def _separable(n_per=8, d=12, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(6), n_per)
    X = rng.normal(size=(y.size, d))
    X[:, :4] += 20.0 * y[:, None]
    return X, y


def test_separable_cohort_full_set():
    X, y = _separable()
    r = evaluate(X, FeatureSet.FULL, y=y, params=ForestParams(n_trees=20), k=4, seed=1)
    assert r.mean_accuracy == 100.0 and r.std_accuracy == 0.0
    assert np.array_equal(r.confusion, np.diag(np.bincount(y)))


def test_evaluate_all_rows_and_roundtrip(tmp_path):
    X, y = _separable(n_per=5, d=10, seed=2)
    reports = evaluate_all(X, y=y, params=ForestParams(n_trees=10), k=3, seed=4)
    assert [r.feature_set for r in reports] == list(FeatureSet)
    lines = summary_csv_text(reports).splitlines()
    assert lines[0] == "feature_set,accuracy_mean,accuracy_std,mean_execution_time_s"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["Full", "AnovaSelected", "RfSelected", "Pca"]
    write_reports(reports, tmp_path / "r.json", tmp_path / "r.csv")
    back = load_reports(tmp_path / "r.json")
    assert [b.to_json() for b in back] == [r.to_json() for r in reports]
    assert reports[0].n_kept == [10, 10, 10] and reports[0].reduction_pct == 0.0
    assert all(0 <= v <= 10 for v in reports[3].n_kept)


def test_evaluate_is_deterministic_except_timing():
    X, y = _separable(n_per=5, d=8, seed=5)
    kw = dict(y=y, params=ForestParams(n_trees=10, seed=2), k=3, seed=2)
    a = evaluate(X, FeatureSet.ANOVA, **kw).to_json(include_timing=False)
    b = evaluate(X, FeatureSet.ANOVA, **kw).to_json(include_timing=False)
    assert json.dumps(a) == json.dumps(b)
    assert "mean_execution_time_s" not in a


def test_paper_mode_selects_once():
    X, y = _separable(n_per=5, d=8, seed=6)
    r = evaluate(X, FeatureSet.PCA, SelectionMode.PAPER_MODE, y=y, params=ForestParams(n_trees=5), k=3)
    assert len(set(r.n_kept)) == 1


def test_feature_set_aliases():
    assert FeatureSet.parse("rf-selected") is FeatureSet.RF
    assert FeatureSet.parse("ANOVA") is FeatureSet.ANOVA
    assert SelectionMode.parse("paper-mode") is SelectionMode.PAPER_MODE
    with pytest.raises(ValueError):
        FeatureSet.parse("lasso")


def _selection(indices, method=SelectionMethod.ANOVA):
    return SelectionResult(method, tuple(indices), [], 211, 0.0)


def test_category_report_identical_and_disjoint():
    cat = default_catalog()
    same = category_report(_selection(range(0, 50)), _selection(range(0, 50), SelectionMethod.RF_EMBEDDED), cat)
    assert same.overlap_pct == 100.0 and same.intersection == same.counts["Anova"]
    apart = category_report(_selection(range(0, 50)), _selection(range(60, 90), SelectionMethod.RF_EMBEDDED), cat)
    assert apart.overlap_pct == 0.0 and not any(apart.intersection.values())


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(0, 210), max_size=80), st.sets(st.integers(0, 210), max_size=80))
def test_category_counts_partition(a, r):
    cat = default_catalog()
    rep = category_report(_selection(sorted(a)), _selection(sorted(r), SelectionMethod.RF_EMBEDDED), cat)
    assert sum(rep.counts["Anova"].values()) == len(a)
    assert sum(rep.counts["RfEmbedded"].values()) == len(r)
    both = a & r
    assert sum(rep.intersection.values()) == len(both)
    for category, n in rep.intersection.items():
        assert n == sum(1 for i in both if cat[i].category.value == category)
    assert rep.overlap_pct == pytest.approx(100.0 * len(both) / len(r) if r else 0.0)
    assert len(rep.long_rows()) == 12
