"""Cross-validated evaluation of the four feature sets and error analytics."""

from __future__ import annotations

import enum
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_json, atomic_write_text
from .errors import CatalogMismatch, KTooLarge
from .features.catalog import FeatureCatalog, FeatureCategory
from .forest import ForestParams, fit
from .ingest import LABEL_STRINGS, N_CLASSES, StageLabel
from .selection import SelectionResult, pca_fit, select_anova, select_rf_embedded

SUMMARY_HEADER = ("feature_set", "accuracy_mean", "accuracy_std", "mean_execution_time_s")


class FeatureSet(str, enum.Enum):
    FULL = "Full"
    ANOVA = "AnovaSelected"
    RF = "RfSelected"
    PCA = "Pca"

    @classmethod
    def parse(cls, text: str) -> "FeatureSet":
        key = text.strip().lower()
        aliases = {
            "full": cls.FULL, "anova": cls.ANOVA, "anovaselected": cls.ANOVA,
            "rf": cls.RF, "rfselected": cls.RF, "rf-selected": cls.RF, "rfembedded": cls.RF,
            "pca": cls.PCA,
        }
        if key not in aliases:
            raise ValueError(f"unknown feature set '{text}'")
        return aliases[key]


class SelectionMode(str, enum.Enum):
    WITHIN_FOLD = "WithinFold"
    PAPER_MODE = "PaperMode"

    @classmethod
    def parse(cls, text: str) -> "SelectionMode":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown selection mode '{text}'")


@dataclass(frozen=True)
class SelectionConfig:
    alpha: float = 0.05
    pca_target: float = 0.95
    rf_runs: int = 5
    rf_threshold: float = 0.8

    @classmethod
    def from_dict(cls, doc: dict | None) -> "SelectionConfig":
        return cls(**(doc or {}))


def kfold_split(n: int, k: int = 5, labels=None, seed: int = 0, stratified: bool = True) -> list:
    """Shuffled k-fold test-index partition of ``range(n)``.

    When stratified, members of each class are dealt round-robin across
    folds, continuing from where the previous class stopped, so both fold
    sizes and per-class fold counts differ by at most one.
    """
    if k < 2 and n > 1:
        raise ValueError("k must be at least 2")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the {n} available rows")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), 0xF01D]))
    perm = rng.permutation(n)
    if not stratified or labels is None:
        return [np.sort(f) for f in np.array_split(perm, k)]
    labels = np.asarray(labels)
    if labels.shape[0] != n:
        raise ValueError("labels must have length n")
    buckets = [[] for _ in range(k)]
    slot = 0
    for cls in np.unique(labels):
        for i in perm[labels[perm] == cls]:
            buckets[slot % k].append(int(i))
            slot += 1
    return [np.sort(np.array(b, dtype=int)) for b in buckets]


def confusion_matrix(y_true, y_pred, n_classes: int = N_CLASSES) -> np.ndarray:
    """Rows are true labels, columns predicted, both in StageLabel order."""
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1)
    return m


def confusion_stats(confusion) -> tuple[float, np.ndarray, float]:
    """Overall and per-class misclassification (%) and the adjacent-error share.

    The adjacent share is the fraction of off-diagonal mass one stage away
    from the diagonal; with no errors it is 1.0 by convention.
    """
    c = np.asarray(confusion, dtype=float)
    total = c.sum()
    overall = 100.0 * (1.0 - np.trace(c) / total) if total > 0 else 0.0
    rows = c.sum(axis=1)
    diag = np.diag(c)
    per_class = np.where(rows > 0, 100.0 * (1.0 - diag / np.where(rows > 0, rows, 1.0)), 0.0)
    off = total - np.trace(c)
    if off <= 0:
        return overall, per_class, 1.0
    i, j = np.indices(c.shape)
    adjacent = c[np.abs(i - j) == 1].sum()
    return overall, per_class, float(adjacent / off)


@dataclass
class EvaluationReport:
    feature_set: FeatureSet
    selection_mode: SelectionMode
    fold_accuracies: list
    mean_accuracy: float
    std_accuracy: float
    mean_execution_time_s: float
    mean_selection_time_s: float
    confusion: np.ndarray
    reduction_pct: float
    n_kept: list = field(default_factory=list)
    k: int = 5
    seed: int = 0
    stratified: bool = True
    predictions: list = field(default_factory=list)

    @property
    def mean_total_time_s(self) -> float:
        return self.mean_execution_time_s + self.mean_selection_time_s

    def to_json(self, include_timing: bool = True) -> dict:
        overall, per_class, adjacency = confusion_stats(self.confusion)
        doc = {
            "feature_set": self.feature_set.value,
            "selection_mode": self.selection_mode.value,
            "k": self.k,
            "seed": self.seed,
            "stratified": self.stratified,
            "fold_accuracies": [float(a) for a in self.fold_accuracies],
            "mean_accuracy": float(self.mean_accuracy),
            "std_accuracy": float(self.std_accuracy),
            "reduction_pct": float(self.reduction_pct),
            "n_kept": [int(v) for v in self.n_kept],
            "labels": list(LABEL_STRINGS),
            "confusion": self.confusion.astype(int).tolist(),
            "overall_misclassification_pct": overall,
            "per_class_misclassification_pct": [float(v) for v in per_class],
            "adjacency_fraction": adjacency,
            "predictions": [int(p) for p in self.predictions],
        }
        if include_timing:
            doc["mean_execution_time_s"] = float(self.mean_execution_time_s)
            doc["mean_selection_time_s"] = float(self.mean_selection_time_s)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "EvaluationReport":
        return cls(
            feature_set=FeatureSet(doc["feature_set"]),
            selection_mode=SelectionMode(doc["selection_mode"]),
            fold_accuracies=list(doc["fold_accuracies"]),
            mean_accuracy=float(doc["mean_accuracy"]),
            std_accuracy=float(doc["std_accuracy"]),
            mean_execution_time_s=float(doc.get("mean_execution_time_s", float("nan"))),
            mean_selection_time_s=float(doc.get("mean_selection_time_s", float("nan"))),
            confusion=np.array(doc["confusion"], dtype=np.int64),
            reduction_pct=float(doc["reduction_pct"]),
            n_kept=list(doc.get("n_kept", [])),
            k=int(doc.get("k", 5)),
            seed=int(doc.get("seed", 0)),
            stratified=bool(doc.get("stratified", True)),
            predictions=list(doc.get("predictions", [])),
        )

    def summary_row(self) -> tuple:
        return (self.feature_set.value, f"{self.mean_accuracy:.4f}", f"{self.std_accuracy:.4f}",
                f"{self.mean_execution_time_s:.6f}")


def _select(feature_set: FeatureSet, X, y, cfg: SelectionConfig, seed: int,
            params: ForestParams) -> SelectionResult | None:
    if feature_set == FeatureSet.FULL:
        return None
    if feature_set == FeatureSet.ANOVA:
        return select_anova(X, cfg.alpha, y=y)
    if feature_set == FeatureSet.PCA:
        return pca_fit(X, cfg.pca_target)
    return select_rf_embedded(X, cfg.rf_runs, cfg.rf_threshold, seed=seed, params=params, y=y)


def evaluate(data, feature_set=FeatureSet.FULL, selection_mode=SelectionMode.WITHIN_FOLD,
             params: ForestParams | None = None, k: int = 5, seed: int = 0,
             stratified: bool = True, selection: SelectionConfig | None = None,
             y=None, n_jobs: int = 1) -> EvaluationReport:
    """k-fold cross-validation of a forest on one feature set.

    ``mean_execution_time_s`` is the mean wall-clock time of forest fit plus
    prediction per fold; selection time is reported separately as
    ``mean_selection_time_s``. Folds always run sequentially so timings
    are not skewed by contention.
    """
    feature_set = FeatureSet(feature_set)
    selection_mode = SelectionMode(selection_mode)
    params = params or ForestParams(seed=seed)
    cfg = selection or SelectionConfig()
    if y is None:
        X, y = np.asarray(data.values, dtype=float), np.asarray(data.y)
    else:
        X, y = np.asarray(data, dtype=float), np.asarray(y)
    n, d = X.shape
    folds = kfold_split(n, k, y, seed, stratified)

    global_sel, global_sel_time = None, 0.0
    if selection_mode == SelectionMode.PAPER_MODE:
        t0 = time.perf_counter()
        global_sel = _select(feature_set, X, y, cfg, seed, params)
        global_sel_time = time.perf_counter() - t0

    accs, fit_times, sel_times, kept, reductions = [], [], [], [], []
    pred_all = np.zeros(n, dtype=int)
    for test in folds:
        train = np.setdiff1d(np.arange(n), test)
        if selection_mode == SelectionMode.WITHIN_FOLD:
            t0 = time.perf_counter()
            sel = _select(feature_set, X[train], y[train], cfg, seed, params)
            sel_times.append(time.perf_counter() - t0)
        else:
            sel = global_sel
            sel_times.append(global_sel_time)
        Xtr, Xte = (X[train], X[test]) if sel is None else (sel.transform(X[train]), sel.transform(X[test]))
        kept.append(d if sel is None else sel.n_kept)
        reductions.append(0.0 if sel is None else sel.reduction_pct)
        t0 = time.perf_counter()
        model = fit(Xtr, y[train], params, n_jobs=n_jobs)
        pred = model.predict(Xte, n_jobs=n_jobs)
        fit_times.append(time.perf_counter() - t0)
        pred_all[test] = pred
        accs.append(100.0 * float(np.mean(pred == y[test])))
    conf = confusion_matrix(y, pred_all)
    return EvaluationReport(
        feature_set=feature_set,
        selection_mode=selection_mode,
        fold_accuracies=accs,
        mean_accuracy=float(np.mean(accs)),
        std_accuracy=float(np.std(accs)),
        mean_execution_time_s=float(np.mean(fit_times)),
        mean_selection_time_s=float(np.mean(sel_times)),
        confusion=conf,
        reduction_pct=float(np.mean(reductions)),
        n_kept=kept,
        k=k,
        seed=seed,
        stratified=stratified,
        predictions=pred_all.tolist(),
    )


def evaluate_all(data, selection_mode=SelectionMode.WITHIN_FOLD, **kwargs) -> list[EvaluationReport]:
    """One report per feature set, in Full, ANOVA, RF-selected, PCA order."""
    return [evaluate(data, fs, selection_mode, **kwargs) for fs in FeatureSet]


def summary_csv_text(reports) -> str:
    lines = [",".join(SUMMARY_HEADER)]
    lines.extend(",".join(r.summary_row()) for r in reports)
    return "\n".join(lines) + "\n"


def confusion_csv_text(confusion) -> str:
    lines = [",".join(["true\\predicted"] + list(LABEL_STRINGS))]
    for lab, row in zip(LABEL_STRINGS, np.asarray(confusion, dtype=int)):
        lines.append(",".join([lab] + [str(v) for v in row]))
    return "\n".join(lines) + "\n"


def write_reports(reports, json_path=None, csv_path=None, include_timing: bool = True):
    if json_path is not None:
        atomic_write_json(json_path, {"reports": [r.to_json(include_timing) for r in reports]})
    if csv_path is not None:
        atomic_write_text(csv_path, summary_csv_text(reports))


def load_reports(path) -> list[EvaluationReport]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [EvaluationReport.from_json(r) for r in doc["reports"]]


@dataclass
class CategoryReport:
    counts: dict  # method -> category -> count
    intersection: dict  # category -> count
    overlap_pct: float  # relative to the RF-selected set
    overlap_pct_anova: float
    overlap_pct_union: float
    intersection_names: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "counts": self.counts,
            "intersection": self.intersection,
            "intersection_total": int(sum(self.intersection.values())),
            "overlap_pct": self.overlap_pct,
            "overlap_pct_anova_base": self.overlap_pct_anova,
            "overlap_pct_union_base": self.overlap_pct_union,
            "intersection_names": list(self.intersection_names),
        }

    def long_rows(self) -> list[tuple]:
        rows = []
        for method, per_cat in list(self.counts.items()) + [("Intersection", self.intersection)]:
            for cat, n in per_cat.items():
                rows.append((method, cat, int(n)))
        return rows


def _per_category(indices, catalog: FeatureCatalog) -> dict:
    out = {c.value: 0 for c in FeatureCategory}
    for i in indices:
        out[catalog[i].category.value] += 1
    return out


def category_report(anova: SelectionResult, rf: SelectionResult, catalog: FeatureCatalog) -> CategoryReport:
    """Per-category selection counts for both methods and their overlap."""
    for res in (anova, rf):
        if res.n_original != len(catalog):
            raise CatalogMismatch(
                f"{res.method.value} selection covers {res.n_original} features, catalog has {len(catalog)}"
            )
    a, r = set(anova.selected_indices), set(rf.selected_indices)
    both = sorted(a & r)
    union = a | r
    pct = lambda num, den: 100.0 * num / den if den else 0.0  # noqa: E731
    return CategoryReport(
        counts={"Anova": _per_category(sorted(a), catalog), "RfEmbedded": _per_category(sorted(r), catalog)},
        intersection=_per_category(both, catalog),
        overlap_pct=pct(len(both), len(r)),
        overlap_pct_anova=pct(len(both), len(a)),
        overlap_pct_union=pct(len(both), len(union)),
        intersection_names=[catalog[i].name for i in both],
    )


def label_strings(indices) -> list[str]:
    return [StageLabel(int(i)).to_string() for i in indices]
