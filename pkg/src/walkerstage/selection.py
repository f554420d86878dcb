"""Feature selection: one-way ANOVA filter, correlation PCA, forest importances."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_write_json, atomic_write_text
from .errors import DegenerateGroups, TooFewRows, WidthMismatch
from .forest import ForestParams, fit

_BETACF_EPS = 1e-15
_BETACF_TINY = 1e-300
_BETACF_MAX_ITER = 1000


class SelectionMethod(str, enum.Enum):
    ANOVA = "Anova"
    PCA = "Pca"
    RF_EMBEDDED = "RfEmbedded"


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_TINY:
        d = _BETACF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _BETACF_TINY if abs(d) < _BETACF_TINY else d
        c = 1.0 + aa / c
        c = _BETACF_TINY if abs(c) < _BETACF_TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _BETACF_TINY if abs(d) < _BETACF_TINY else d
        c = 1.0 + aa / c
        c = _BETACF_TINY if abs(c) < _BETACF_TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # the continued fraction converges fast only below the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_survival(f: float, dfn: float, dfd: float) -> float:
    """Upper tail ``P(F > f)`` of the F distribution."""
    if math.isnan(f):
        return math.nan
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return betainc(dfd / 2.0, dfn / 2.0, dfd / (dfd + dfn * f))


def _xy(data, y):
    if y is None:
        return np.asarray(data.values, dtype=float), np.asarray(data.y)
    return np.asarray(data, dtype=float), np.asarray(y)


def anova_table(X, y, min_groups: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """One-way ANOVA F and p for every column of ``X`` grouped by ``y``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y)
    groups, inverse, sizes = np.unique(y, return_inverse=True, return_counts=True)
    g, n = groups.size, y.size
    if g < min_groups:
        raise DegenerateGroups(f"need at least {min_groups} label groups, found {g}")
    if (sizes < 2).any():
        small = [str(groups[i]) for i in np.flatnonzero(sizes < 2)]
        raise DegenerateGroups(f"groups with fewer than 2 members: {', '.join(small)}")
    grand = X.mean(axis=0)
    ssb = np.zeros(X.shape[1])
    ssw = np.zeros(X.shape[1])
    for k in range(g):
        rows = X[inverse == k]
        mu = rows.mean(axis=0)
        ssb += sizes[k] * (mu - grand) ** 2
        ssw += ((rows - mu) ** 2).sum(axis=0)
    dfb, dfw = g - 1, n - g
    scale = np.max(np.abs(X), axis=0)
    # round-off floor: a constant column has no variance of either kind
    floor = (1e-13 * np.maximum(scale, 1e-300)) ** 2 * n
    f = np.empty(X.shape[1])
    p = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        if ssb[j] <= floor[j]:
            f[j], p[j] = 0.0, 1.0
        elif ssw[j] <= floor[j]:
            f[j], p[j] = math.inf, 0.0
        else:
            f[j] = (ssb[j] / dfb) / (ssw[j] / dfw)
            p[j] = f_survival(f[j], dfb, dfw)
    return f, p


def anova_f_oneway(data, feature_index: int, y=None) -> tuple[float, float]:
    """F statistic and p-value of one feature column across label groups."""
    X, y = _xy(data, y)
    f, p = anova_table(X[:, [feature_index]], y)
    return float(f[0]), float(p[0])


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    scale: np.ndarray
    loadings: np.ndarray  # (d, d) columns sorted by decreasing eigenvalue
    explained_variance_ratio: np.ndarray
    n_components: int

    @property
    def kept_loadings(self) -> np.ndarray:
        return self.loadings[:, : self.n_components]

    def standardize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.mean.size:
            raise WidthMismatch(f"PCA model expects {self.mean.size} features, got {X.shape[1]}")
        return (X - self.mean) / self.scale

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "loadings": self.loadings.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "n_components": int(self.n_components),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PcaModel":
        return cls(np.array(doc["mean"], dtype=float), np.array(doc["scale"], dtype=float),
                   np.array(doc["loadings"], dtype=float),
                   np.array(doc["explained_variance_ratio"], dtype=float), int(doc["n_components"]))


@dataclass
class SelectionResult:
    method: SelectionMethod
    selected_indices: tuple
    per_feature_stats: list
    n_original: int
    reduction_pct: float
    params: dict = field(default_factory=dict)
    pca_model: PcaModel | None = None

    @property
    def n_kept(self) -> int:
        if self.method == SelectionMethod.PCA:
            return self.pca_model.n_components
        return len(self.selected_indices)

    def transform(self, X) -> np.ndarray:
        """Reduce a full-width matrix to the selected columns or PCA scores."""
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_original:
            raise WidthMismatch(f"selection expects {self.n_original} features, got {X.shape[1]}")
        if self.method == SelectionMethod.PCA:
            return pca_transform(self.pca_model, X)
        return X[:, list(self.selected_indices)]

    def to_json(self, catalog=None) -> dict:
        names = catalog.names if catalog is not None else None
        stats = []
        for rec in self.per_feature_stats:
            rec = dict(rec)
            if names is not None and "index" in rec:
                rec["name"] = names[rec["index"]]
            stats.append(rec)
        doc = {
            "method": self.method.value,
            "params": dict(self.params),
            "n_original": int(self.n_original),
            "n_kept": int(self.n_kept),
            "reduction_pct": float(self.reduction_pct),
            "selected_indices": [int(i) for i in self.selected_indices],
        }
        if names is not None:
            doc["selected_names"] = [names[i] for i in self.selected_indices]
        doc["per_feature_stats"] = stats
        if self.pca_model is not None:
            doc["pca_model"] = self.pca_model.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SelectionResult":
        pca = doc.get("pca_model")
        return cls(
            method=SelectionMethod(doc["method"]),
            selected_indices=tuple(int(i) for i in doc["selected_indices"]),
            per_feature_stats=[dict(r) for r in doc.get("per_feature_stats", [])],
            n_original=int(doc["n_original"]),
            reduction_pct=float(doc["reduction_pct"]),
            params=dict(doc.get("params", {})),
            pca_model=PcaModel.from_json(pca) if pca else None,
        )

    def save(self, path, catalog=None):
        return atomic_write_json(path, self.to_json(catalog))


def reduction_pct(kept: int, original: int) -> float:
    return 100.0 * (1.0 - kept / original) if original else 0.0


def _finite(v: float):
    # JSON has no infinity; an infinite F is recorded as null
    return float(v) if math.isfinite(v) else None


def select_anova(data, alpha: float = 0.05, y=None) -> SelectionResult:
    """Keep features whose one-way ANOVA p-value is below ``alpha``.

    At least three label groups are required.
    """
    X, y = _xy(data, y)
    f, p = anova_table(X, y, min_groups=3)
    keep = tuple(int(j) for j in np.flatnonzero(p < alpha))
    stats = [{"index": j, "statistic": _finite(f[j]), "p_value": float(p[j])} for j in range(X.shape[1])]
    return SelectionResult(SelectionMethod.ANOVA, keep, stats, X.shape[1],
                           reduction_pct(len(keep), X.shape[1]), {"alpha": alpha})


def pca_fit(data, variance_target: float = 0.95) -> SelectionResult:
    """Correlation-matrix PCA keeping the fewest components reaching the target.

    Each component's largest-magnitude loading is made positive.
    """
    X = np.asarray(data.values if hasattr(data, "values") else data, dtype=float)
    n, d = X.shape
    if n < 2:
        raise TooFewRows(f"PCA needs at least 2 rows, got {n}")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    corr = (Z.T @ Z) / n
    evals, evecs = np.linalg.eigh(corr)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    big = np.argmax(np.abs(evecs), axis=0)
    evecs *= np.where(evecs[big, np.arange(d)] < 0, -1.0, 1.0)
    total = evals.sum()
    ratio = evals / total if total > 0 else np.full(d, 1.0 / d)
    cum = np.cumsum(ratio)
    k = int(np.searchsorted(cum, variance_target, side="left")) + 1
    k = min(max(k, 1), d)
    model = PcaModel(mean, scale, evecs, ratio, k)
    stats = [{"component": i, "explained_variance_ratio": float(ratio[i])} for i in range(k)]
    return SelectionResult(SelectionMethod.PCA, (), stats, d, reduction_pct(k, d),
                           {"variance_target": variance_target}, model)


def pca_transform(model: PcaModel, X, n_components: int | None = None) -> np.ndarray:
    k = model.n_components if n_components is None else int(n_components)
    return model.standardize(X) @ model.loadings[:, :k]


def pca_inverse_transform(model: PcaModel, scores, standardized: bool = False) -> np.ndarray:
    """Map component scores back to feature space (or standardized space)."""
    scores = np.asarray(scores, dtype=float)
    Z = scores @ model.loadings[:, : scores.shape[1]].T
    return Z if standardized else Z * model.scale + model.mean


def write_pca_loadings_csv(model: PcaModel, path, names=None):
    k = model.n_components
    names = list(names) if names is not None else [f"f{j}" for j in range(model.mean.size)]
    lines = [",".join(["feature"] + [f"PC{i + 1}" for i in range(k)])]
    for j, name in enumerate(names):
        lines.append(",".join([name] + [repr(float(v)) for v in model.loadings[j, :k]]))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def run_seed(seed: int, run: int) -> int:
    """Forest seed for one selection run, derived from the master seed."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), 0x5E1EC7, run])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def select_rf_embedded(data, runs: int = 5, frequency_threshold: float = 0.8, seed: int = 0,
                       params: ForestParams | None = None, y=None, n_jobs: int = 1) -> SelectionResult:
    """Keep features the forest finds important in enough repeated runs.

    A feature is important in a run when its normalized Gini importance
    exceeds the uniform baseline ``1/d``. It is selected when that holds in
    at least ``ceil(frequency_threshold * runs)`` runs.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    X, y = _xy(data, y)
    d = X.shape[1]
    base = params or ForestParams()
    hits = np.zeros(d, dtype=int)
    for r in range(runs):
        p = ForestParams(**{**base.to_json(), "seed": run_seed(seed, r)})
        model = fit(X, y, p, n_jobs=n_jobs)
        hits += model.importances > 1.0 / d
    need = math.ceil(frequency_threshold * runs - 1e-12)
    keep = tuple(int(j) for j in np.flatnonzero(hits >= need))
    stats = [{"index": j, "importance_frequency": float(hits[j] / runs)} for j in range(d)]
    return SelectionResult(SelectionMethod.RF_EMBEDDED, keep, stats, d, reduction_pct(len(keep), d),
                           {"runs": runs, "frequency_threshold": frequency_threshold,
                            "min_runs": need, "seed": int(seed)})
