"""Random forest classifier with Gini splits, grown from scratch.

Trees are stored as flat node arrays. Every tree draws its bootstrap
sample and feature subsets from its own random stream, seeded by
``(seed, tree_index)``, so results do not depend on how trees are
scheduled across threads.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_json
from .errors import EmptyMatrix, MalformedFile, SingleClass, WidthMismatch

MODEL_FORMAT = "walkerstage-forest"
MODEL_VERSION = 1
_MIN_GAIN = 1e-12


def gini_impurity(class_counts) -> float:
    """``1 - sum(p_i^2)`` of a class-count vector; 0 for an empty node."""
    c = np.asarray(class_counts, dtype=float)
    n = c.sum()
    if n <= 0:
        return 0.0
    p = c / n
    return float(1.0 - np.sum(p * p))


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: object = "sqrt"  # "sqrt", "all", an int, or a fraction in (0, 1]
    min_leaf: int = 1
    max_depth: int | None = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.n_trees) < 1:
            raise ValueError("n_trees must be at least 1")
        if int(self.min_leaf) < 1:
            raise ValueError("min_leaf must be at least 1")
        if self.max_depth is not None and int(self.max_depth) < 0:
            raise ValueError("max_depth must be non-negative")

    def resolve_max_features(self, d: int) -> int:
        mf = self.max_features
        if mf in ("sqrt", None):
            k = int(math.isqrt(d))
        elif mf == "all":
            k = d
        elif isinstance(mf, float) and not float(mf).is_integer():
            if not 0 < mf <= 1:
                raise ValueError("fractional max_features must lie in (0, 1]")
            k = int(math.floor(mf * d))
        else:
            k = int(mf)
            if k > d:
                raise ValueError(f"max_features={k} exceeds the {d} available features")
        return min(max(k, 1), d)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict | None) -> "ForestParams":
        return cls(**(doc or {}))


@dataclass
class Tree:
    """Flat binary tree. ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) training class counts

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_index(self, X: np.ndarray) -> np.ndarray:
        """Class index voted by each row's leaf (ties to the lowest index)."""
        return np.argmax(self.counts[self.leaf_index(X)], axis=1)

    def to_json(self, node: int = 0) -> dict:
        if self.feature[node] < 0:
            return {"counts": [int(c) for c in self.counts[node]]}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "counts": [int(c) for c in self.counts[node]],
            "left": self.to_json(int(self.left[node])),
            "right": self.to_json(int(self.right[node])),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Tree":
        feats, thr, left, right, counts = [], [], [], [], []

        def visit(rec):
            i = len(feats)
            feats.append(int(rec.get("feature", -1)))
            thr.append(float(rec.get("threshold", 0.0)))
            left.append(-1)
            right.append(-1)
            counts.append(rec["counts"])
            if feats[i] >= 0:
                left[i] = visit(rec["left"])
                right[i] = visit(rec["right"])
            return i

        visit(doc)
        return cls(np.array(feats, dtype=np.intp), np.array(thr, dtype=float),
                   np.array(left, dtype=np.intp), np.array(right, dtype=np.intp),
                   np.array(counts, dtype=np.int64))


def best_split(Xn: np.ndarray, yn: np.ndarray, n_classes: int, min_leaf: int):
    """Best Gini split over the columns of ``Xn`` at a single node.

    Returns ``(column, threshold, score)`` or ``None``. The score is
    ``sum(left_c^2)/n_left + sum(right_c^2)/n_right``, which grows as the
    weighted child impurity falls. Ties go to the lowest column, then the
    lowest threshold, because ``argmax`` returns the first maximum in
    column-major scan order.
    """
    n, m = Xn.shape
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn[order]
    onehot = ys[:, :, None] == np.arange(n_classes)
    left = np.cumsum(onehot, axis=0, dtype=np.int64)[:-1]  # (n-1, m, C)
    total = left[-1] + onehot[-1]
    right = total[None] - left
    nl = np.arange(1, n, dtype=float)[:, None]
    score = (left * left).sum(axis=2) / nl + (right * right).sum(axis=2) / (n - nl)
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        ok = (nl >= min_leaf) & (n - nl >= min_leaf)
        valid &= ok
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf).T  # (m, n-1): column-major tie order
    flat = int(np.argmax(score))
    col, pos = divmod(flat, n - 1)
    lo, hi = xs[pos, col], xs[pos + 1, col]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return col, float(thr), float(score[col, pos])


def grow_tree(X: np.ndarray, y_idx: np.ndarray, n_classes: int, params: ForestParams,
              rng: np.random.Generator, n_features_split: int):
    """Grow one tree on the given (already resampled) rows.

    The tree is grown breadth-first: all open nodes of one depth are
    searched together in a single vectorized pass, so the cost tracks the
    number of (row, candidate feature) pairs rather than the node count.
    Each node draws its own feature subset and applies the same split rule
    and tie-breaking as ``best_split``.

    Returns the tree and the per-feature impurity decrease, weighted by
    node size relative to the root.
    """
    n_root, d = X.shape
    k = n_features_split
    C = n_classes
    min_leaf = int(params.min_leaf)
    max_depth = params.max_depth
    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    counts = [np.bincount(y_idx, minlength=C)]
    gain = np.zeros(d)
    level = [(0, np.arange(n_root))]
    depth = 0
    while level:
        if max_depth is not None and depth >= max_depth:
            break
        todo = [(nd, rows) for nd, rows in level
                if rows.size >= 2 * min_leaf and np.count_nonzero(counts[nd]) > 1]
        if not todo:
            break
        m = len(todo)
        sizes = np.array([rows.size for _, rows in todo])
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        rows_cat = np.concatenate([rows for _, rows in todo])
        N = rows_cat.size
        seg = np.repeat(np.arange(m), sizes)
        # uniform k-subsets of the features, one per node, in ascending order
        feats = np.sort(np.argsort(rng.random((m, d)), axis=1)[:, :k], axis=1)

        V = X[rows_cat[:, None], feats[seg]]
        o1 = np.argsort(V, axis=0, kind="stable")
        o2 = np.argsort(seg[o1], axis=0, kind="stable")
        order = np.take_along_axis(o1, o2, axis=0)
        xs = np.take_along_axis(V, order, axis=0)
        ys = y_idx[rows_cat][order]
        cum = np.cumsum(ys[:, :, None] == np.arange(C), axis=0, dtype=np.int64)
        base = np.zeros((m, k, C), dtype=np.int64)
        base[1:] = cum[starts[1:] - 1]
        lc = cum - base[seg]
        tot = cum[starts + sizes - 1] - base
        rc = tot[seg] - lc
        nl = (np.arange(N) - starts[seg] + 1).astype(float)[:, None]
        nr = sizes[seg][:, None] - nl
        score = (lc * lc).sum(axis=2) / nl + (rc * rc).sum(axis=2) / np.maximum(nr, 1.0)
        valid = np.zeros((N, k), dtype=bool)
        valid[:-1] = (xs[1:] > xs[:-1]) & (seg[1:] == seg[:-1])[:, None]
        if min_leaf > 1:
            valid &= (nl >= min_leaf) & (nr >= min_leaf)
        score = np.where(valid, score, -np.inf)
        segmax = np.maximum.reduceat(score.max(axis=1), starts)
        # ties: lowest feature column, then lowest threshold
        big = k * N
        key = np.where(valid & (score == segmax[seg][:, None]),
                       np.arange(k)[None, :] * N + np.arange(N)[:, None], big)
        segkey = np.minimum.reduceat(key.min(axis=1), starts)

        nxt = []
        for s, (nd, rows) in enumerate(todo):
            if segkey[s] >= big:
                continue
            j, i = divmod(int(segkey[s]), N)
            c = counts[nd]
            n = rows.size
            parent = float(np.dot(c, c)) / n
            sc = float(score[i, j])
            if (sc - parent) / n <= _MIN_GAIN:
                continue
            lo, hi = xs[i, j], xs[i + 1, j]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            f = int(feats[s, j])
            go_left = X[rows, f] <= thr
            feature[nd] = f
            threshold[nd] = float(thr)
            gain[f] += (sc - parent) / n_root
            for child_rows, child_counts in ((rows[go_left], lc[i, j]), (rows[~go_left], rc[i, j])):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                counts.append(child_counts.copy())
                nxt.append((len(feature) - 1, child_rows))
            left[nd], right[nd] = len(feature) - 2, len(feature) - 1
        level = nxt
        depth += 1
    tree = Tree(np.array(feature, dtype=np.intp), np.array(threshold, dtype=float),
                np.array(left, dtype=np.intp), np.array(right, dtype=np.intp),
                np.array(counts, dtype=np.int64).reshape(-1, C))
    return tree, gain


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), tree_index])))


@dataclass
class ForestModel:
    trees: list
    params: ForestParams
    classes: np.ndarray
    n_features: int
    importances: np.ndarray
    oob_accuracy: float | None = None
    feature_names: tuple = field(default_factory=tuple)

    def predict(self, X, n_jobs: int = 1) -> np.ndarray:
        """Plurality vote of the trees; ties go to the lowest class label."""
        votes = self.vote_counts(X, n_jobs)
        return self.classes[np.argmax(votes, axis=1)]

    def vote_counts(self, X, n_jobs: int = 1) -> np.ndarray:
        X = _check_width(X, self.n_features)
        votes = np.zeros((X.shape[0], self.classes.size), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for pred in _map(lambda t: t.predict_index(X), self.trees, n_jobs):
            votes[rows, pred] += 1
        return votes

    def tree_predictions(self, X) -> np.ndarray:
        X = _check_width(X, self.n_features)
        return np.stack([self.classes[t.predict_index(X)] for t in self.trees])

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "params": self.params.to_json(),
            "classes": [int(c) for c in self.classes],
            "n_features": int(self.n_features),
            "feature_names": list(self.feature_names),
            "importances": [float(v) for v in self.importances],
            "oob_accuracy": self.oob_accuracy,
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ForestModel":
        if doc.get("format") != MODEL_FORMAT:
            raise MalformedFile("not a forest model file")
        if int(doc.get("version", -1)) != MODEL_VERSION:
            raise MalformedFile(f"unsupported model version {doc.get('version')}")
        return cls(
            trees=[Tree.from_json(t) for t in doc["trees"]],
            params=ForestParams.from_dict(doc["params"]),
            classes=np.array(doc["classes"], dtype=int),
            n_features=int(doc["n_features"]),
            importances=np.array(doc["importances"], dtype=float),
            oob_accuracy=doc.get("oob_accuracy"),
            feature_names=tuple(doc.get("feature_names", ())),
        )

    def save(self, path):
        return atomic_write_json(path, self.to_json())


def _check_width(X, d) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != d:
        raise WidthMismatch(f"model expects {d} features, got {X.shape[1]}")
    return X


def _map(fn, items, n_jobs):
    if n_jobs is not None and n_jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _xy(data, y):
    if y is None:
        return np.asarray(data.values, dtype=float), np.asarray(data.y)
    return np.asarray(data, dtype=float), np.asarray(y)


def fit(data, y=None, params: ForestParams | None = None, n_jobs: int = 1,
        feature_names=()) -> ForestModel:
    """Fit a forest to ``(X, y)`` or to a FeatureMatrix-like ``data``."""
    params = params or ForestParams()
    X, y = _xy(data, y)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyMatrix("cannot fit a forest to an empty matrix")
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y differ in length")
    classes, y_idx = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise SingleClass("need at least two distinct labels to fit")
    if not feature_names and hasattr(data, "catalog"):
        feature_names = tuple(data.catalog.names)
    n, d = X.shape
    k = params.resolve_max_features(d)

    def one(t):
        rng = tree_rng(params.seed, t)
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        tree, gain = grow_tree(X[rows], y_idx[rows], classes.size, params, rng, k)
        return tree, gain, rows

    grown = _map(one, list(range(int(params.n_trees))), n_jobs)
    trees = [g[0] for g in grown]
    total = np.zeros(d)
    for g in grown:
        total += g[1]
    s = total.sum()
    importances = total / s if s > 0 else np.full(d, 1.0 / d)

    oob = None
    if params.bootstrap:
        votes = np.zeros((n, classes.size), dtype=np.int64)
        for tree, _, rows in grown:
            out = np.setdiff1d(np.arange(n), rows)
            if out.size:
                votes[out, tree.predict_index(X[out])] += 1
        seen = votes.sum(axis=1) > 0
        if seen.any():
            oob = float(np.mean(np.argmax(votes[seen], axis=1) == y_idx[seen]))
    return ForestModel(trees, params, classes, d, importances, oob, tuple(feature_names))


def predict(model: ForestModel, X, n_jobs: int = 1) -> np.ndarray:
    return model.predict(X, n_jobs)


def tune_trees(data, y=None, grid=(1, 10, 100), k_folds: int = 5, seed: int = 0,
               params: ForestParams | None = None, stratified: bool = True) -> list[tuple]:
    """Cross-validated accuracy and fit+predict time for each tree count.

    Returns ``(n_trees, mean_accuracy_pct, mean_time_s)`` rows in grid order.
    Folds are identical for every grid point.
    """
    from .evaluation import kfold_split

    grid = list(grid)
    if not grid:
        raise ValueError("tree grid must not be empty")
    X, y = _xy(data, y)
    params = params or ForestParams(seed=seed)
    folds = kfold_split(X.shape[0], k_folds, y if stratified else None, seed, stratified)
    out = []
    for n_trees in grid:
        p = ForestParams(**{**params.to_json(), "n_trees": int(n_trees)})
        accs, times = [], []
        for test in folds:
            train = np.setdiff1d(np.arange(X.shape[0]), test)
            t0 = time.perf_counter()
            model = fit(X[train], y[train], p)
            pred = model.predict(X[test])
            times.append(time.perf_counter() - t0)
            accs.append(100.0 * np.mean(pred == y[test]))
        out.append((int(n_trees), float(np.mean(accs)), float(np.mean(times))))
    return out


def load_model(path) -> ForestModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: invalid JSON ({exc})") from None
    return ForestModel.from_json(doc)
