"""Gradient-boosted regression trees on logistic loss, from scratch.

Histogram-based greedy splitting over quantile-binned features, with
per-feature monotone constraints enforced structurally: a candidate split
whose child values violate the required ordering is rejected, and child
value ranges are clipped to the feasible interval while recursing, so
every fitted tree is monotone by construction.

Determinism: split ties break toward the lowest feature index and lowest
threshold; no subsampling is performed, so identical data and parameters
produce bit-identical ensembles.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_EPS_P = 1e-7  # probability floor for base score / logloss


class BoostError(RuntimeError):
    pass


@dataclass(frozen=True)
class GbtParams:
    max_depth: int = 4
    learning_rate: float = 0.1
    n_rounds: int = 500
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    min_split_gain: float = 0.0
    early_stopping_patience: int = 50
    max_bins: int = 256

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "n_rounds": self.n_rounds,
            "min_child_weight": self.min_child_weight,
            "reg_lambda": self.reg_lambda,
            "min_split_gain": self.min_split_gain,
            "early_stopping_patience": self.early_stopping_patience,
            "max_bins": self.max_bins,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtParams":
        return cls(**d)


@dataclass
class Tree:
    """Flat-array binary tree. Leaves have feature == -1."""

    feature: np.ndarray  # int32, -1 for leaf
    threshold: np.ndarray  # float64, split value (go left if x <= threshold)
    left: np.ndarray  # int32 child ids
    right: np.ndarray
    value: np.ndarray  # float64 leaf values (raw, unscaled)
    gain: np.ndarray  # float64 split gain (0 for leaves)

    def predict(self, x: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        idx = np.zeros(n, dtype=np.int32)
        active = self.feature[idx] >= 0
        while np.any(active):
            rows = np.nonzero(active)[0]
            node = idx[rows]
            go_left = x[rows, self.feature[node]] <= self.threshold[node]
            idx[rows] = np.where(go_left, self.left[node], self.right[node])
            active = self.feature[idx] >= 0
        return self.value[idx]

    def leaf_values_below(self, node: int) -> np.ndarray:
        if self.feature[node] < 0:
            return self.value[node : node + 1]
        return np.concatenate([
            self.leaf_values_below(int(self.left[node])),
            self.leaf_values_below(int(self.right[node])),
        ])

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(v) for v in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "gain": [float(v) for v in self.gain],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=float),
            gain=np.asarray(d["gain"], dtype=float),
        )


def _bin_features(x: np.ndarray, max_bins: int) -> list[np.ndarray]:
    """Candidate thresholds per feature, drawn from observed values."""
    edges = []
    for j in range(x.shape[1]):
        u = np.unique(x[:, j])
        if u.size <= 1:
            edges.append(np.empty(0))
        elif u.size <= max_bins:
            edges.append(u[:-1])
        else:
            qs = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
            cand = np.quantile(u, qs, method="lower")
            edges.append(np.unique(cand))
    return edges


def _code(x: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    out = np.empty(x.shape, dtype=np.int32)
    for j, e in enumerate(edges):
        out[:, j] = np.searchsorted(e, x[:, j], side="left") if e.size else 0
    return out


class _TreeBuilder:
    def __init__(self, codes, edges, constraints, params: GbtParams):
        self.codes = codes
        self.edges = edges
        self.constraints = constraints
        self.p = params
        self.n_features = codes.shape[1]

    def build(self, grad: np.ndarray, hess: np.ndarray) -> tuple[Tree, np.ndarray]:
        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []
        gain: list[float] = []
        leaf_of_row = np.zeros(self.codes.shape[0], dtype=np.int32)

        def new_node() -> int:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            gain.append(0.0)
            return len(feature) - 1

        lam = self.p.reg_lambda
        root = new_node()
        stack = [(root, np.arange(self.codes.shape[0], dtype=np.int64), 0, -np.inf, np.inf)]
        while stack:
            node, rows, depth, lo, hi = stack.pop()
            g = grad[rows]
            h = hess[rows]
            tot_g = float(g.sum())
            tot_h = float(h.sum())
            w_node = float(np.clip(-tot_g / (tot_h + lam), lo, hi))
            best = self._best_split(rows, g, h, tot_g, tot_h, lo, hi) if depth < self.p.max_depth else None
            if best is None:
                value[node] = w_node
                leaf_of_row[rows] = node
                continue
            f, bin_j, split_gain, w_l, w_r = best
            feature[node] = f
            threshold[node] = float(self.edges[f][bin_j])
            gain[node] = split_gain
            mask = self.codes[rows, f] <= bin_j
            l_id = new_node()
            r_id = new_node()
            left[node] = l_id
            right[node] = r_id
            if self.constraints[f] > 0:
                mid = 0.5 * (w_l + w_r)
                l_b, r_b = (lo, min(hi, mid)), (max(lo, mid), hi)
            elif self.constraints[f] < 0:
                mid = 0.5 * (w_l + w_r)
                l_b, r_b = (max(lo, mid), hi), (lo, min(hi, mid))
            else:
                l_b, r_b = (lo, hi), (lo, hi)
            # Right pushed first so the left child is processed (and numbered)
            # next; ordering only affects node ids, not predictions.
            stack.append((r_id, rows[~mask], depth + 1, r_b[0], r_b[1]))
            stack.append((l_id, rows[mask], depth + 1, l_b[0], l_b[1]))

        tree = Tree(
            feature=np.asarray(feature, dtype=np.int32),
            threshold=np.asarray(threshold, dtype=float),
            left=np.asarray(left, dtype=np.int32),
            right=np.asarray(right, dtype=np.int32),
            value=np.asarray(value, dtype=float),
            gain=np.asarray(gain, dtype=float),
        )
        return tree, leaf_of_row

    def _best_split(self, rows, g, h, tot_g, tot_h, lo, hi):
        lam = self.p.reg_lambda
        mcw = self.p.min_child_weight
        parent_score = tot_g * tot_g / (tot_h + lam)
        best = None
        best_gain = self.p.min_split_gain
        for f in range(self.n_features):
            e = self.edges[f]
            if e.size == 0:
                continue
            n_bins = e.size + 1
            c = self.codes[rows, f]
            gh = np.bincount(c, weights=g, minlength=n_bins)
            hh = np.bincount(c, weights=h, minlength=n_bins)
            gl = np.cumsum(gh)[:-1]
            hl = np.cumsum(hh)[:-1]
            gr = tot_g - gl
            hr = tot_h - hl
            valid = (hl >= mcw) & (hr >= mcw)
            if not np.any(valid):
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                w_l = np.clip(np.nan_to_num(-gl / (hl + lam)), lo, hi)
                w_r = np.clip(np.nan_to_num(-gr / (hr + lam)), lo, hi)
            cons = self.constraints[f]
            if cons > 0:
                valid &= w_l <= w_r
            elif cons < 0:
                valid &= w_l >= w_r
            with np.errstate(divide="ignore", invalid="ignore"):
                gains = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score)
            gains[~valid | ~np.isfinite(gains)] = -np.inf
            j = int(np.argmax(gains))
            if gains[j] > best_gain:
                best_gain = float(gains[j])
                best = (f, j, float(gains[j]), float(w_l[j]), float(w_r[j]))
        return best


@dataclass
class GbtModel:
    """Boosted-tree ensemble for binary outcomes.

    prediction = sigmoid(base_score + sum over trees of learning_rate *
    leaf value).
    """

    feature_names: list[str]
    monotone_constraints: list[int]
    base_score: float
    learning_rate: float
    trees: list[Tree]
    params: GbtParams
    best_tune_logloss: float | None = None

    def margin(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[0], self.base_score)
        for t in self.trees:
            out += self.learning_rate * t.predict(x)
        return out

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.margin(x)))

    def feature_importance(self) -> dict[str, float]:
        """Share of total split gain per feature."""
        tot = np.zeros(len(self.feature_names))
        for t in self.trees:
            for node in range(t.feature.size):
                if t.feature[node] >= 0:
                    tot[t.feature[node]] += t.gain[node]
        s = tot.sum()
        if s > 0:
            tot = tot / s
        return {name: float(v) for name, v in zip(self.feature_names, tot)}

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "feature_names": self.feature_names,
            "monotone_constraints": self.monotone_constraints,
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "params": self.params.to_dict(),
            "best_tune_logloss": self.best_tune_logloss,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise BoostError(f"unsupported model format version {d.get('format_version')}")
        return cls(
            feature_names=list(d["feature_names"]),
            monotone_constraints=list(d["monotone_constraints"]),
            base_score=d["base_score"],
            learning_rate=d["learning_rate"],
            trees=[Tree.from_dict(t) for t in d["trees"]],
            params=GbtParams.from_dict(d["params"]),
            best_tune_logloss=d.get("best_tune_logloss"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, s: str) -> "GbtModel":
        return cls.from_dict(json.loads(s))


def logloss(y: np.ndarray, p: np.ndarray, weights=None) -> float:
    y = np.asarray(y, dtype=float)
    p = np.clip(np.asarray(p, dtype=float), _EPS_P, 1.0 - _EPS_P)
    ll = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    if weights is None:
        return float(ll.mean())
    w = np.asarray(weights, dtype=float)
    return float(np.sum(w * ll) / np.sum(w))


def fit_gbt(
    x: np.ndarray,
    y: np.ndarray,
    feature_names: list[str],
    monotone_constraints: list[int],
    params: GbtParams,
    weights=None,
    tune: tuple[np.ndarray, np.ndarray] | None = None,
) -> GbtModel:
    """Boost on logistic loss; early-stops on tune logloss when a tune set
    is supplied."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if x.shape[1] != len(feature_names) or len(monotone_constraints) != len(feature_names):
        raise BoostError("feature names / constraints do not match the design width")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)

    mean = float(np.clip(np.sum(w * y) / np.sum(w), _EPS_P, 1.0 - _EPS_P))
    base = float(np.log(mean / (1.0 - mean)))

    edges = _bin_features(x, params.max_bins)
    codes = _code(x, edges)
    builder = _TreeBuilder(codes, edges, monotone_constraints, params)

    margin = np.full(n, base)
    trees: list[Tree] = []
    tune_margin = None
    if tune is not None:
        x_tune = np.asarray(tune[0], dtype=float)
        y_tune = np.asarray(tune[1], dtype=float)
        tune_margin = np.full(x_tune.shape[0], base)
    best_ll = np.inf
    best_round = -1

    for b in range(params.n_rounds):
        p = 1.0 / (1.0 + np.exp(-margin))
        grad = w * (p - y)
        hess = w * p * (1.0 - p)
        tree, leaf_of_row = builder.build(grad, hess)
        trees.append(tree)
        margin += params.learning_rate * tree.value[leaf_of_row]
        if tune_margin is not None:
            tune_margin += params.learning_rate * tree.predict(x_tune)
            ll = logloss(y_tune, 1.0 / (1.0 + np.exp(-tune_margin)))
            if ll < best_ll - 1e-12:
                best_ll = ll
                best_round = b
            elif b - best_round >= params.early_stopping_patience:
                break

    if tune_margin is not None and best_round >= 0:
        trees = trees[: best_round + 1]
    model = GbtModel(
        feature_names=list(feature_names),
        monotone_constraints=list(monotone_constraints),
        base_score=base,
        learning_rate=params.learning_rate,
        trees=trees,
        params=params,
        best_tune_logloss=None if tune is None else best_ll,
    )
    return model


def fit_gbt_grid(
    x,
    y,
    feature_names,
    monotone_constraints,
    grid: list[GbtParams],
    tune_x,
    tune_y,
    weights=None,
) -> tuple[GbtModel, list[dict]]:
    """Select the grid point minimizing tune logloss.

    Returns the winning model (already fit on the training rows, truncated
    at its best round) and a per-point report.
    """
    if not grid:
        raise BoostError("hyperparameter grid is empty")
    report = []
    best_model = None
    best_ll = np.inf
    for i, prm in enumerate(grid):
        model = fit_gbt(
            x, y, feature_names, monotone_constraints, prm,
            weights=weights, tune=(tune_x, tune_y),
        )
        ll = model.best_tune_logloss if model.best_tune_logloss is not None else np.inf
        report.append({"grid_index": i, "params": prm.to_dict(), "tune_logloss": ll,
                       "n_trees": len(model.trees)})
        if ll < best_ll:
            best_ll = ll
            best_model = model
    if best_ll >= np.log(2.0):
        logger.warning(
            "every grid point tunes worse than a fair coin (best logloss %.4f); "
            "returning the best anyway", best_ll,
        )
    return best_model, report


@dataclass
class MulticlassGbt:
    """One-vs-rest boosted trees with softmax normalization."""

    classes: list[str]
    models: list[GbtModel]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        margins = np.stack([m.margin(x) for m in self.models], axis=1)
        margins -= margins.max(axis=1, keepdims=True)
        e = np.exp(margins)
        return e / e.sum(axis=1, keepdims=True)

    def feature_importance(self) -> dict[str, float]:
        tot: dict[str, float] = {}
        for m in self.models:
            for k, v in m.feature_importance().items():
                tot[k] = tot.get(k, 0.0) + v
        s = sum(tot.values())
        return {k: v / s if s > 0 else 0.0 for k, v in tot.items()}

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "classes": self.classes,
            "models": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MulticlassGbt":
        return cls(
            classes=list(d["classes"]),
            models=[GbtModel.from_dict(m) for m in d["models"]],
        )


def fit_gbt_multiclass(
    x,
    y_labels,
    classes: list[str],
    feature_names,
    params: GbtParams,
    weights=None,
    tune: tuple[np.ndarray, np.ndarray] | None = None,
) -> MulticlassGbt:
    y_labels = np.asarray(y_labels)
    models = []
    for cls_name in classes:
        y_bin = (y_labels == cls_name).astype(float)
        if y_bin.sum() == 0:
            raise BoostError(f"class {cls_name!r} absent from the training pool")
        tune_k = None
        if tune is not None:
            tune_k = (tune[0], (np.asarray(tune[1]) == cls_name).astype(float))
        models.append(
            fit_gbt(x, y_bin, feature_names, [0] * len(feature_names), params,
                    weights=weights, tune=tune_k)
        )
    return MulticlassGbt(classes=list(classes), models=models)


def audit_monotonicity(model: GbtModel) -> list[str]:
    """Structural audit: for every split on a constrained feature, the leaf
    values of the lower branch must respect the required ordering against
    the upper branch. Returns a list of violation descriptions (empty =
    pass)."""
    problems = []
    for ti, tree in enumerate(model.trees):
        for node in range(tree.feature.size):
            f = int(tree.feature[node])
            if f < 0:
                continue
            cons = model.monotone_constraints[f]
            if cons == 0:
                continue
            lo_vals = tree.leaf_values_below(int(tree.left[node]))
            hi_vals = tree.leaf_values_below(int(tree.right[node]))
            if cons > 0 and lo_vals.max() > hi_vals.min() + 1e-12:
                problems.append(
                    f"tree {ti} node {node}: increasing constraint on "
                    f"{model.feature_names[f]} violated"
                )
            if cons < 0 and lo_vals.min() < hi_vals.max() - 1e-12:
                problems.append(
                    f"tree {ti} node {node}: decreasing constraint on "
                    f"{model.feature_names[f]} violated"
                )
    return problems
