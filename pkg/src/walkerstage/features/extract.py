"""Catalog-driven feature extraction and cohort feature matrices."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .._io import atomic_write_text
from ..errors import CatalogMismatch, MalformedFile, SubjectError, UnknownExtractor, WalkerStageError
from ..ingest import CohortManifest, SensorSession, StageLabel
from ..preprocess.pipeline import PreprocessConfig, PreprocessedSession, preprocess_session
from ..preprocess.segmentation import GaitSegments, PhaseKind, wheel_speeds
from . import information as info
from .catalog import FeatureCatalog, default_catalog
from .frequency import extract_frequency
from .spatiotemporal import as_indices, extract_spatiotemporal, extract_walk_phase_means
from .spherical import MIN_RADIUS, to_spherical
from .statistical import extract_statistical

ANGLE_CHANNELS = ("azimuth", "elevation")
PHASES = {
    "active": None,
    "walking": (PhaseKind.WALK_OUT, PhaseKind.WALK_BACK),
    "turn": (PhaseKind.TURN,),
    "all": (),
}
WHEEL_SMOOTH_S = 0.3


class FeatureContext:
    """Per-session channels, phase masks and an extractor result cache."""

    def __init__(self, session: SensorSession, footfalls, segments: GaitSegments):
        self.session = session
        self.fs = session.sample_rate_hz
        self.footfalls = as_indices(footfalls)
        self.segments = segments
        self.cache: dict = {}
        v_left, v_right = wheel_speeds(session, WHEEL_SMOOTH_S)
        az, el, r = to_spherical(session.accel)
        self.channels = {
            "fL": session.force_left,
            "fR": session.force_right,
            "vL": v_left,
            "vR": v_right,
            "ax": session.accel_x,
            "ay": session.accel_y,
            "az": session.accel_z,
            "azimuth": az,
            "elevation": el,
            "radius": r,
        }
        self._valid_angle = r >= MIN_RADIUS

    def phase_mask(self, phase: str) -> np.ndarray:
        key = ("mask", phase)
        if key not in self.cache:
            n = self.session.n_samples
            if phase not in PHASES:
                raise KeyError(f"unknown phase '{phase}'")
            kinds = PHASES[phase]
            if kinds is None:
                start, end = self.segments.active_span
                m = np.zeros(n, dtype=bool)
                m[start:end] = True
            elif kinds == ():
                m = np.ones(n, dtype=bool)
            else:
                m = self.segments.mask(n, kinds)
            self.cache[key] = m
        return self.cache[key]

    def mask_for(self, channels, phase: str) -> np.ndarray:
        m = self.phase_mask(phase)
        if any(c in ANGLE_CHANNELS for c in channels):
            m = m & self._valid_angle
        return m

    def signal(self, channel: str, phase: str) -> np.ndarray:
        if channel not in self.channels:
            raise KeyError(f"unknown channel '{channel}'")
        return self.channels[channel][self.mask_for((channel,), phase)]

    def cached(self, key, compute):
        if key not in self.cache:
            self.cache[key] = compute()
        return self.cache[key]

    def tug(self):
        return self.cached(("tug",), lambda: extract_spatiotemporal(self.session, self.footfalls, self.segments))


def _nan_on_short(fn):
    try:
        return fn()
    except WalkerStageError:
        return None


def _statistical(ctx: FeatureContext, d) -> float:
    phase = d.params.get("phase", "active")
    vals = ctx.cached(("statistical", d.channel, phase),
                      lambda: _nan_on_short(lambda: extract_statistical(ctx.signal(d.channel, phase))))
    return np.nan if vals is None else vals[d.params["stat"]]


def _frequency(ctx: FeatureContext, d) -> float:
    phase = d.params.get("phase", "active")
    vals = ctx.cached(("frequency", d.channel, phase),
                      lambda: _nan_on_short(lambda: extract_frequency(ctx.signal(d.channel, phase), ctx.fs)))
    return np.nan if vals is None else vals[d.params["stat"]]


def _axis_pair(ctx: FeatureContext, d) -> float:
    a, b = d.channel.split("|")
    m = ctx.mask_for((a, b), d.params.get("phase", "walking"))
    x, y = ctx.channels[a][m], ctx.channels[b][m]
    if x.size < 2:
        return np.nan
    bins = int(d.params.get("bins", info.DEFAULT_BINS))
    stat = d.params["stat"]
    if stat == "correlation":
        return info.pearson(x, y)
    if stat == "mutual_info":
        return info.mutual_information(x, y, bins)
    if stat == "cross_entropy":
        return info.cross_entropy(x, y, bins)
    raise KeyError(f"unknown axis-pair statistic '{stat}'")


def _zero_crossing_rate(ctx: FeatureContext, d) -> float:
    x = ctx.signal(d.channel, d.params.get("phase", "walking"))
    if x.size < 2:
        return np.nan
    return info.zero_crossing_rate(x, ctx.fs)


def _harmonic_ratio(ctx: FeatureContext, d) -> float:
    cadence = ctx.tug()["cadence"]
    if not np.isfinite(cadence):
        return np.nan
    f0 = cadence / 60.0
    n_harm = int(d.params.get("n_harmonics", 10))
    kinds = PHASES[d.params.get("phase", "walking")]
    ratios, weights = [], []
    valid = ctx.mask_for((d.channel,), "all")
    for p in ctx.segments.phases:
        if kinds is not None and kinds != () and p.kind not in kinds:
            continue
        x = ctx.channels[d.channel][p.start_index:p.end_index][valid[p.start_index:p.end_index]]
        # need at least two step periods for the fundamental to be resolved
        if x.size < 2 * ctx.fs / f0:
            continue
        hr = info.harmonic_ratio(x, ctx.fs, f0, n_harm)
        if np.isfinite(hr):
            ratios.append(hr)
            weights.append(x.size)
    if not ratios:
        return np.nan
    return float(np.average(ratios, weights=weights))


def _walk_ratio(ctx: FeatureContext, d) -> float:
    tug = ctx.tug()
    return tug["step_length_mean"] / tug["cadence"]


def _walking_intensity(ctx: FeatureContext, d) -> float:
    m = ctx.phase_mask("walking")
    if m.sum() < 2:
        return np.nan
    acc = ctx.session.accel[m]
    dyn = acc - acc.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum(dyn * dyn, axis=1))))


def _spatiotemporal(ctx: FeatureContext, d) -> float:
    scope = d.params.get("scope", "tug")
    if scope == "tug":
        return ctx.tug()[d.params["stat"]]
    if scope == "walk_phase_mean":
        vals = ctx.cached(("walk_phase_mean",),
                          lambda: extract_walk_phase_means(ctx.session, ctx.footfalls, ctx.segments))
        return vals[d.params["stat"]]
    raise KeyError(f"unknown spatio-temporal scope '{scope}'")


EXTRACTORS = {
    "statistical": _statistical,
    "frequency": _frequency,
    "axis_pair": _axis_pair,
    "zero_crossing_rate": _zero_crossing_rate,
    "harmonic_ratio": _harmonic_ratio,
    "walk_ratio": _walk_ratio,
    "walking_intensity": _walking_intensity,
    "spatiotemporal": _spatiotemporal,
}


def validate_catalog(catalog: FeatureCatalog):
    for d in catalog:
        if d.extractor not in EXTRACTORS:
            raise UnknownExtractor(f"feature '{d.name}' uses unregistered extractor '{d.extractor}'")


def extract_all(session: SensorSession, footfalls, segments: GaitSegments,
                catalog: FeatureCatalog | None = None) -> np.ndarray:
    """Feature vector of one preprocessed session, ordered like ``catalog``.

    ``session`` should be the smoothed, frame-aligned session. Undefined
    features are NaN; matrix assembly imputes them.
    """
    catalog = default_catalog() if catalog is None else catalog
    validate_catalog(catalog)
    ctx = FeatureContext(session, footfalls, segments)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.array([EXTRACTORS[d.extractor](ctx, d) for d in catalog], dtype=float)
    out[~np.isfinite(out)] = np.nan
    return out


def extract_preprocessed(pre: PreprocessedSession, catalog: FeatureCatalog | None = None) -> np.ndarray:
    return extract_all(pre.session, pre.footfalls, pre.segments, catalog)


@dataclass
class FeatureMatrix:
    values: np.ndarray
    labels: tuple
    catalog: FeatureCatalog
    subject_ids: tuple = ()
    imputed: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.labels), -1) \
            if len(self.labels) else np.zeros((0, len(self.catalog)))
        self.labels = tuple(StageLabel(lab) for lab in self.labels)
        if not self.subject_ids:
            self.subject_ids = tuple(f"S{i:03d}" for i in range(len(self.labels)))
        self.subject_ids = tuple(self.subject_ids)
        if self.values.shape[1] != len(self.catalog):
            raise CatalogMismatch(
                f"matrix has {self.values.shape[1]} columns, catalog has {len(self.catalog)}"
            )
        if len(self.subject_ids) != len(self.labels):
            raise ValueError("subject_ids and labels differ in length")
        if self.imputed is None:
            self.imputed = np.zeros(self.values.shape, dtype=bool)

    @property
    def n_subjects(self) -> int:
        return self.values.shape[0]

    @property
    def y(self) -> np.ndarray:
        return np.array([int(lab) for lab in self.labels], dtype=int)

    def imputation_report(self) -> dict:
        """Number of imputed cells per feature, for features with any."""
        counts = self.imputed.sum(axis=0)
        return {self.catalog[j].name: int(c) for j, c in enumerate(counts) if c}

    def select(self, columns) -> "FeatureMatrix":
        columns = list(columns)
        return FeatureMatrix(self.values[:, columns], self.labels, self.catalog.subset(columns),
                             self.subject_ids, self.imputed[:, columns])

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["subject_id", "label"] + self.catalog.names) + "\n")
        for sid, lab, row in zip(self.subject_ids, self.labels, self.values):
            buf.write(",".join([sid, lab.to_string()] + [repr(float(v)) for v in row]) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        return atomic_write_text(path, self.to_csv_text())


def impute_median(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Replace NaN cells by their column median over defined cells.

    Columns with no defined cell (including every column of a
    single-row matrix with a NaN) fall back to 0.
    """
    values = np.array(values, dtype=float)
    missing = ~np.isfinite(values)
    for j in np.flatnonzero(missing.any(axis=0)):
        col = values[:, j]
        ok = ~missing[:, j]
        fill = float(np.median(col[ok])) if ok.any() and values.shape[0] > 1 else 0.0
        col[missing[:, j]] = fill
    return values, missing


def load_matrix_csv(path, catalog: FeatureCatalog | None = None) -> FeatureMatrix:
    """Read a matrix CSV; column names must all be present in ``catalog``."""
    catalog = default_catalog() if catalog is None else catalog
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["subject_id", "label"]:
        raise MalformedFile(f"{path}: expected header starting with subject_id,label")
    names = rows[0][2:]
    try:
        cols = [catalog.index_of(n) for n in names]
    except KeyError as exc:
        raise CatalogMismatch(f"{path}: feature {exc} is not in the catalog") from None
    sub = catalog.subset(cols)
    sids, labels, vals = [], [], []
    for i, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        if len(r) != len(names) + 2:
            raise MalformedFile(f"{path}: line {i} has {len(r)} fields, expected {len(names) + 2}")
        sids.append(r[0])
        labels.append(StageLabel.from_string(r[1]))
        try:
            vals.append([float(v) for v in r[2:]])
        except ValueError:
            raise MalformedFile(f"{path}: line {i} has a non-numeric value") from None
    values = np.array(vals, dtype=float).reshape(len(vals), len(names))
    return FeatureMatrix(values, tuple(labels), sub, tuple(sids))


def _extract_subject(args):
    manifest, entry, config, catalog = args
    try:
        session = manifest.load(entry)
        pre = preprocess_session(session, config)
        return extract_preprocessed(pre, catalog)
    except WalkerStageError as exc:
        raise SubjectError(entry.subject_id, exc) from exc


def build_matrix(manifest: CohortManifest, config: PreprocessConfig | None = None,
                 catalog: FeatureCatalog | None = None, n_jobs: int = 1) -> FeatureMatrix:
    """Preprocess and extract every manifest subject into an imputed matrix.

    Rows follow manifest order regardless of ``n_jobs``.
    """
    catalog = default_catalog() if catalog is None else catalog
    validate_catalog(catalog)
    config = config or PreprocessConfig()
    jobs = [(manifest, e, config, catalog) for e in manifest]
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_extract_subject, jobs))
    else:
        rows = [_extract_subject(j) for j in jobs]
    raw = np.array(rows, dtype=float).reshape(len(rows), len(catalog))
    values, missing = impute_median(raw)
    return FeatureMatrix(values, tuple(e.label for e in manifest),
                         catalog, tuple(e.subject_id for e in manifest), missing)
