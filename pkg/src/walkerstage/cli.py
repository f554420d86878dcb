"""Command-line entry point wiring every pipeline stage.

Each subcommand reads its settings from an optional JSON config file
(``--config``) and lets explicit flags override them. Failures print a
single ``error: ...`` line on stderr and exit with status 1; usage
errors exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write_json, atomic_write_text, csv_text
from .errors import MalformedFile, WalkerStageError, WidthMismatch
from .evaluation import (
    FeatureSet,
    SelectionConfig,
    SelectionMode,
    category_report,
    confusion_csv_text,
    evaluate,
    label_strings,
    load_reports,
    summary_csv_text,
    write_reports,
)
from .features import build_matrix, default_catalog, load_catalog, load_matrix_csv
from .forest import ForestParams, fit, load_model
from .ingest import DEFAULT_SAMPLE_RATE_HZ, LABEL_STRINGS, StageLabel, load_manifest
from .preprocess import PreprocessConfig
from .selection import (
    SelectionResult,
    pca_fit,
    select_anova,
    select_rf_embedded,
    write_pca_loadings_csv,
)
from .synthgen import generate_cohort


class UsageError(Exception):
    """Bad flag values detected after argparse; reported with exit status 2."""


@dataclass
class PipelineConfig:
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    catalog: str | None = None
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    forest: ForestParams = field(default_factory=ForestParams)
    k: int = 5
    seed: int = 0
    stratified: bool = True
    selection_mode: SelectionMode = SelectionMode.WITHIN_FOLD
    n_jobs: int = 1

    @classmethod
    def from_dict(cls, doc: dict | None) -> "PipelineConfig":
        doc = dict(doc or {})
        ev = dict(doc.pop("evaluation", None) or {})
        known = {"sample_rate_hz", "preprocess", "catalog", "selection", "forest", "n_jobs"}
        unknown = set(doc) - known
        if unknown:
            raise MalformedFile(f"config: unknown keys {sorted(unknown)}")
        unknown = set(ev) - {"k", "seed", "stratified", "selection_mode"}
        if unknown:
            raise MalformedFile(f"config: unknown evaluation keys {sorted(unknown)}")
        try:
            cfg = cls(
                sample_rate_hz=float(doc.get("sample_rate_hz", DEFAULT_SAMPLE_RATE_HZ)),
                preprocess=PreprocessConfig.from_dict(doc.get("preprocess")),
                catalog=doc.get("catalog"),
                selection=SelectionConfig.from_dict(doc.get("selection")),
                forest=ForestParams.from_dict(doc.get("forest")),
                k=int(ev.get("k", 5)),
                seed=int(ev.get("seed", 0)),
                stratified=bool(ev.get("stratified", True)),
                selection_mode=SelectionMode.parse(ev.get("selection_mode", "WithinFold")),
                n_jobs=int(doc.get("n_jobs", 1)),
            )
        except TypeError as exc:
            raise MalformedFile(f"config: {exc}") from None
        cfg.validate()
        return cfg

    def validate(self):
        s = self.selection
        checks = [
            (self.sample_rate_hz > 0, "sample_rate_hz must be positive"),
            (0.0 <= s.alpha <= 1.0, "selection.alpha must lie in [0, 1]"),
            (0.0 < s.pca_target <= 1.0, "selection.pca_target must lie in (0, 1]"),
            (int(s.rf_runs) >= 1, "selection.rf_runs must be at least 1"),
            (0.0 < s.rf_threshold <= 1.0, "selection.rf_threshold must lie in (0, 1]"),
            (self.k >= 2, "evaluation.k must be at least 2"),
            (self.n_jobs >= 1, "n_jobs must be at least 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise MalformedFile(f"config: {msg}")
        if self.catalog is not None:
            load_catalog(self.catalog)  # surfaces CatalogNotFound early

    def load_catalog(self):
        return default_catalog() if self.catalog is None else load_catalog(self.catalog)


def _parse_counts(text: str) -> dict:
    counts = {}
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            name, value = part.split("=")
            counts[StageLabel.from_string(name.strip())] = int(value)
        except (ValueError, WalkerStageError):
            raise UsageError(f"bad --counts entry '{part}', expected LABEL=N") from None
    return counts


def _load_config(args) -> PipelineConfig:
    doc = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise MalformedFile(f"config not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise MalformedFile(f"{path}: config must be a JSON object")
    # flags win over the file
    if getattr(args, "catalog", None):
        doc["catalog"] = args.catalog
    if getattr(args, "sample_rate", None) is not None:
        doc["sample_rate_hz"] = args.sample_rate
    if getattr(args, "jobs", None) is not None:
        doc["n_jobs"] = args.jobs
    sel = dict(doc.get("selection") or {})
    for flag, key in (("alpha", "alpha"), ("pca_target", "pca_target"),
                      ("rf_runs", "rf_runs"), ("rf_threshold", "rf_threshold")):
        if getattr(args, flag, None) is not None:
            sel[key] = getattr(args, flag)
    doc["selection"] = sel
    forest = dict(doc.get("forest") or {})
    if getattr(args, "trees", None) is not None:
        forest["n_trees"] = args.trees
    if getattr(args, "max_features", None) is not None:
        mf = args.max_features
        try:
            mf = float(mf) if "." in mf else int(mf)
        except ValueError:
            pass
        forest["max_features"] = mf
    ev = dict(doc.get("evaluation") or {})
    if getattr(args, "seed", None) is not None:
        ev["seed"] = args.seed
        forest["seed"] = args.seed
    forest.setdefault("seed", ev.get("seed", 0))
    doc["forest"] = forest
    if getattr(args, "k", None) is not None:
        ev["k"] = args.k
    if getattr(args, "no_stratify", False):
        ev["stratified"] = False
    if getattr(args, "mode", None) is not None:
        ev["selection_mode"] = args.mode
    doc["evaluation"] = ev
    try:
        return PipelineConfig.from_dict(doc)
    except ValueError as exc:
        if isinstance(exc, WalkerStageError):
            raise
        raise MalformedFile(f"config: {exc}") from None


def _load_selection(path) -> SelectionResult:
    try:
        return SelectionResult.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise MalformedFile(f"{path}: not a selection result ({exc})") from None


# subcommands ---------------------------------------------------------------

def cmd_synth(args, cfg: PipelineConfig) -> int:
    counts = _parse_counts(args.counts) if args.counts else None
    seed = 7 if args.seed is None else args.seed
    manifest, _ = generate_cohort(args.out, counts, cfg.sample_rate_hz, seed, args.snr)
    print(f"wrote {len(manifest)} subjects to {args.out}")
    return 0


def cmd_extract(args, cfg: PipelineConfig) -> int:
    manifest = load_manifest(args.manifest)
    if args.sample_rate is not None:
        manifest.sample_rate_hz = cfg.sample_rate_hz
    catalog = cfg.load_catalog()
    matrix = build_matrix(manifest, cfg.preprocess, catalog, n_jobs=cfg.n_jobs)
    matrix.write_csv(args.out)
    report = matrix.imputation_report()
    if args.imputation_report:
        atomic_write_json(args.imputation_report, {"imputed_cells": report})
    print(f"wrote {matrix.n_subjects}x{len(catalog)} matrix to {args.out}"
          f" ({sum(report.values())} imputed cells)")
    return 0


def _select_one(method: str, matrix, cfg: PipelineConfig) -> SelectionResult:
    if method == "anova":
        return select_anova(matrix, cfg.selection.alpha)
    if method == "pca":
        return pca_fit(matrix, cfg.selection.pca_target)
    return select_rf_embedded(matrix, cfg.selection.rf_runs, cfg.selection.rf_threshold,
                              seed=cfg.forest.seed, params=cfg.forest, n_jobs=cfg.n_jobs)


def cmd_select(args, cfg: PipelineConfig) -> int:
    catalog = cfg.load_catalog()
    matrix = load_matrix_csv(args.matrix, catalog)
    result = _select_one(args.method, matrix, cfg)
    result.save(args.out, catalog)
    if args.loadings_csv:
        if result.pca_model is None:
            raise UsageError("--loadings-csv only applies to --method pca")
        write_pca_loadings_csv(result.pca_model, args.loadings_csv, catalog.names)
    print(f"{args.method}: kept {result.n_kept} of {result.n_original}"
          f" ({result.reduction_pct:.1f}% reduction)")
    return 0


def _apply_selection(X, selection_path):
    if not selection_path:
        return X
    return _load_selection(selection_path).transform(X)


def cmd_train(args, cfg: PipelineConfig) -> int:
    catalog = cfg.load_catalog()
    matrix = load_matrix_csv(args.matrix, catalog)
    X = matrix.values
    names = tuple(catalog.names)
    if args.selection:
        sel = _load_selection(args.selection)
        X = sel.transform(X)
        if sel.pca_model is None:
            names = tuple(catalog.names[i] for i in sel.selected_indices)
        else:
            names = tuple(f"PC{i + 1}" for i in range(sel.n_kept))
    model = fit(X, matrix.y, cfg.forest, n_jobs=cfg.n_jobs, feature_names=names)
    model.save(args.out)
    oob = "n/a" if model.oob_accuracy is None else f"{100 * model.oob_accuracy:.2f}%"
    print(f"trained {len(model.trees)} trees on {X.shape[1]} features (OOB accuracy {oob})")
    return 0


def cmd_predict(args, cfg: PipelineConfig) -> int:
    catalog = cfg.load_catalog()
    model = load_model(args.model)
    matrix = load_matrix_csv(args.matrix, catalog)
    X = _apply_selection(matrix.values, args.selection)
    if X.shape[1] != model.n_features:
        raise WidthMismatch(f"model expects {model.n_features} features, matrix gives {X.shape[1]}")
    pred = model.predict(X, n_jobs=cfg.n_jobs)
    rows = list(zip(matrix.subject_ids, label_strings(pred)))
    atomic_write_text(args.out, csv_text(("subject_id", "predicted_label"), rows))
    print(f"wrote {len(rows)} predictions to {args.out}")
    return 0


def _parse_feature_sets(text: str) -> list:
    if text.strip().lower() == "all":
        return list(FeatureSet)
    try:
        return [FeatureSet.parse(t) for t in text.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    sets = _parse_feature_sets(args.feature_set)
    matrix = load_matrix_csv(args.matrix, cfg.load_catalog())
    reports = [
        evaluate(matrix, fs, cfg.selection_mode, params=cfg.forest, k=cfg.k, seed=cfg.seed,
                 stratified=cfg.stratified, selection=cfg.selection, n_jobs=cfg.n_jobs)
        for fs in sets
    ]
    write_reports(reports, args.out_json, args.out_csv)
    for r in reports:
        print(f"{r.feature_set.value}: {r.mean_accuracy:.2f} +/- {r.std_accuracy:.2f}%"
              f" ({r.mean_execution_time_s:.3f} s per fold)")
    return 0


def cmd_report(args, cfg: PipelineConfig) -> int:
    out = Path(args.out_dir)
    reports = load_reports(args.reports)
    atomic_write_text(out / "table1.csv", summary_csv_text(reports))
    conf_rows, acc_rows = [], []
    for r in reports:
        atomic_write_text(out / f"confusion_{r.feature_set.value}.csv", confusion_csv_text(r.confusion))
        acc_rows.append((r.feature_set.value, f"{r.mean_accuracy:.4f}", f"{r.std_accuracy:.4f}"))
        for i, true in enumerate(LABEL_STRINGS):
            for j, pred in enumerate(LABEL_STRINGS):
                conf_rows.append((r.feature_set.value, true, pred, int(r.confusion[i, j])))
    atomic_write_text(out / "plot_accuracy.csv",
                      csv_text(("feature_set", "accuracy_mean", "accuracy_std"), acc_rows))
    atomic_write_text(out / "plot_confusion.csv",
                      csv_text(("feature_set", "true_label", "predicted_label", "count"), conf_rows))

    anova = rf = None
    catalog = cfg.load_catalog()
    if args.anova and args.rf:
        anova, rf = _load_selection(args.anova), _load_selection(args.rf)
    elif args.matrix:
        matrix = load_matrix_csv(args.matrix, catalog)
        anova = select_anova(matrix, cfg.selection.alpha)
        rf = select_rf_embedded(matrix, cfg.selection.rf_runs, cfg.selection.rf_threshold,
                                seed=cfg.forest.seed, params=cfg.forest, n_jobs=cfg.n_jobs)
    elif args.anova or args.rf:
        raise UsageError("--anova and --rf must be given together")
    if anova is not None:
        cat = category_report(anova, rf, catalog)
        atomic_write_json(out / "category_report.json", cat.to_json())
        atomic_write_text(out / "plot_categories.csv",
                          csv_text(("method", "category", "count"), cat.long_rows()))
    print(f"wrote report tables to {out}")
    return 0


# parser --------------------------------------------------------------------

def _version_text() -> str:
    return f"walkerstage {__version__} (feature catalog {default_catalog().version})"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON; flags override its values")
    common.add_argument("--catalog", help="feature catalog JSON (default: packaged v1 catalog)")
    common.add_argument("--jobs", type=int, help="worker count for per-subject and per-tree work")

    p = argparse.ArgumentParser(prog="walkerstage",
                                description="Walker-sensor gait pipeline for disease-stage classification.")
    p.add_argument("--version", action="version", version=_version_text())
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic cohort")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, help="master seed (default 7)")
    s.add_argument("--snr", type=float, default=10.0, help="noise SNR in dB (default 10; inf for clean)")
    s.add_argument("--sample-rate", type=float, help="sample rate in Hz (default 100)")
    s.add_argument("--counts", help="per-class counts, e.g. HC=19,1=14,2=13,2.5=14,3=13,4=13")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", parents=[common], help="manifest to feature-matrix CSV")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True, help="matrix CSV path")
    s.add_argument("--sample-rate", type=float, help="override the manifest sample rate")
    s.add_argument("--imputation-report", help="optional JSON listing imputed cells per feature")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("select", parents=[common], help="run one feature-selection method")
    s.add_argument("--matrix", required=True)
    s.add_argument("--method", required=True, choices=("anova", "pca", "rf"))
    s.add_argument("--out", required=True, help="selection JSON path")
    s.add_argument("--alpha", type=float)
    s.add_argument("--pca-target", type=float)
    s.add_argument("--rf-runs", type=int)
    s.add_argument("--rf-threshold", type=float)
    s.add_argument("--trees", type=int)
    s.add_argument("--max-features")
    s.add_argument("--seed", type=int)
    s.add_argument("--loadings-csv", help="PCA only: write the loading matrix as CSV")
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("train", parents=[common], help="fit a forest on a matrix")
    s.add_argument("--matrix", required=True)
    s.add_argument("--out", required=True, help="model JSON path")
    s.add_argument("--selection", help="selection JSON to apply before fitting")
    s.add_argument("--trees", type=int)
    s.add_argument("--max-features")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="label a matrix with a saved model")
    s.add_argument("--model", required=True)
    s.add_argument("--matrix", required=True)
    s.add_argument("--out", required=True, help="labels CSV path")
    s.add_argument("--selection", help="selection JSON used when the model was trained")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("evaluate", parents=[common], help="k-fold evaluation of feature sets")
    s.add_argument("--matrix", required=True)
    s.add_argument("--feature-set", default="all", help="full, anova, rf, pca, a comma list, or all")
    s.add_argument("--out-json", required=True)
    s.add_argument("--out-csv", help="Table-1 style summary CSV")
    s.add_argument("--mode", choices=("within-fold", "paper-mode"),
                   help="selection inside each fold (default) or once on all rows")
    s.add_argument("--k", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--no-stratify", action="store_true")
    s.add_argument("--trees", type=int)
    s.add_argument("--max-features")
    s.add_argument("--alpha", type=float)
    s.add_argument("--pca-target", type=float)
    s.add_argument("--rf-runs", type=int)
    s.add_argument("--rf-threshold", type=float)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("report", parents=[common], help="tables and plot-ready CSVs from evaluation output")
    s.add_argument("--reports", required=True, help="evaluation JSON")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--matrix", help="matrix CSV, to compute the category report")
    s.add_argument("--anova", help="ANOVA selection JSON for the category report")
    s.add_argument("--rf", help="RF-embedded selection JSON for the category report")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_report)
    return p


def _one_line(exc: BaseException) -> str:
    text = str(exc) or type(exc).__name__
    return " ".join(text.split())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return 2
    except (WalkerStageError, OSError, ValueError, KeyError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
