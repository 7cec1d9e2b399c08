"""Generalized linear models over term-based designs.

Supports the two links used by the transition models: identity (weighted
OLS) and logit (IRLS). Designs are described by an ordered list of terms
(spline blocks, indicators-times-blocks, linear terms, interactions,
intercept); collinear columns are dropped with a warning naming the column
rather than failing, because indicator-by-spline blocks are collinear with
an explicit intercept by construction.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, solve_triangular

from .splines import TRANSFORMS, SplineSpec, basis_matrix

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

MAX_ETA = 30.0  # logit clamp; expit(30) is 1 - 9e-14


class GlmError(RuntimeError):
    pass


class RankError(GlmError):
    pass


class SeparationError(GlmError):
    pass


class ConvergenceError(GlmError):
    pass


@dataclass(frozen=True)
class Gate:
    """Row indicator multiplying a term: 1{field == value} or its complement."""

    feature: str
    value: float
    negate: bool = False

    def mask(self, data: dict[str, np.ndarray]) -> np.ndarray:
        m = np.asarray(data[self.feature], dtype=float) == self.value
        return (~m if self.negate else m).astype(float)

    def label(self) -> str:
        op = "!=" if self.negate else "=="
        return f"{self.feature}{op}{self.value:g}"


@dataclass(frozen=True)
class Term:
    """One design block.

    kind:
      intercept   constant column
      linear      optionally transformed single column
      interaction product of two raw columns
      spline      B-spline block over one (transformed) column
    """

    kind: str
    feature: str = ""
    feature2: str = ""
    transform: str = "identity"
    power: int = 1
    spline: SplineSpec | None = None
    gate: Gate | None = None

    def n_columns(self) -> int:
        return self.spline.n_basis if self.kind == "spline" else 1

    def block(self, data: dict[str, np.ndarray], n_rows: int) -> np.ndarray:
        if self.kind == "intercept":
            out = np.ones((n_rows, 1))
        elif self.kind == "linear":
            col = TRANSFORMS[self.transform](np.asarray(data[self.feature], dtype=float))
            if self.power != 1:
                col = col ** self.power
            out = col.reshape(-1, 1)
        elif self.kind == "interaction":
            a = np.asarray(data[self.feature], dtype=float)
            b = np.asarray(data[self.feature2], dtype=float)
            out = (a * b).reshape(-1, 1)
        elif self.kind == "spline":
            out = basis_matrix(self.spline, np.asarray(data[self.feature], dtype=float))
        else:
            raise GlmError(f"unknown term kind {self.kind!r}")
        if self.gate is not None:
            out = out * self.gate.mask(data)[:, None]
        return out

    def column_labels(self) -> list[str]:
        if self.kind == "intercept":
            base = ["intercept"]
        elif self.kind == "linear":
            name = self.feature if self.transform == "identity" else f"{self.transform}({self.feature})"
            if self.power != 1:
                name = f"{name}^{self.power}"
            base = [name]
        elif self.kind == "interaction":
            base = [f"{self.feature}*{self.feature2}"]
        else:
            name = self.feature if self.spline.input_transform == "identity" \
                else f"{self.spline.input_transform}({self.feature})"
            base = [f"bs({name},df={self.spline.df})[{i}]" for i in range(self.spline.n_basis)]
        if self.gate is not None:
            base = [f"{b}|{self.gate.label()}" for b in base]
        return base


def intercept() -> Term:
    return Term(kind="intercept")


def linear(feature: str, transform: str = "identity", power: int = 1, gate: Gate | None = None) -> Term:
    return Term(kind="linear", feature=feature, transform=transform, power=power, gate=gate)


def interaction(feature: str, feature2: str) -> Term:
    return Term(kind="interaction", feature=feature, feature2=feature2)


def spline(feature: str, spec: SplineSpec, gate: Gate | None = None) -> Term:
    return Term(kind="spline", feature=feature, spline=spec, gate=gate)


def design_matrix(terms: list[Term], data: dict[str, np.ndarray]) -> np.ndarray:
    n_rows = len(next(iter(data.values())))
    return np.hstack([t.block(data, n_rows) for t in terms])


def design_labels(terms: list[Term]) -> list[str]:
    out: list[str] = []
    for t in terms:
        out.extend(t.column_labels())
    return out


@dataclass
class GlmModel:
    """A fitted GLM: terms, coefficients, link, and the kept-column mask."""

    terms: list[Term]
    coefficients: np.ndarray  # full length (dropped columns carry 0)
    link: str  # "logit" | "identity"
    kept: np.ndarray  # bool mask over design columns
    labels: list[str]
    n_iter: int = 0
    converged: bool = True
    fit_weights_supported: bool = True

    def linear_predictor(self, data: dict[str, np.ndarray]) -> np.ndarray:
        x = design_matrix(self.terms, data)
        return x @ self.coefficients

    def predict(self, data: dict[str, np.ndarray]) -> np.ndarray:
        eta = self.linear_predictor(data)
        if self.link == "logit":
            return _expit(eta)
        return eta

    def dropped_columns(self) -> list[str]:
        return [lbl for lbl, k in zip(self.labels, self.kept) if not k]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "link": self.link,
            "coefficients": [float(c) for c in self.coefficients],
            "kept": [bool(k) for k in self.kept],
            "labels": list(self.labels),
            "n_iter": self.n_iter,
            "converged": self.converged,
            "terms": [_term_to_dict(t) for t in self.terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GlmModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise GlmError(f"unsupported model format version {d.get('format_version')}")
        return cls(
            terms=[_term_from_dict(t) for t in d["terms"]],
            coefficients=np.asarray(d["coefficients"], dtype=float),
            link=d["link"],
            kept=np.asarray(d["kept"], dtype=bool),
            labels=list(d["labels"]),
            n_iter=d.get("n_iter", 0),
            converged=d.get("converged", True),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, s: str) -> "GlmModel":
        return cls.from_dict(json.loads(s))


def _term_to_dict(t: Term) -> dict:
    d: dict = {"kind": t.kind}
    if t.feature:
        d["feature"] = t.feature
    if t.feature2:
        d["feature2"] = t.feature2
    if t.transform != "identity":
        d["transform"] = t.transform
    if t.power != 1:
        d["power"] = t.power
    if t.spline is not None:
        d["spline"] = {
            "df": t.spline.df,
            "degree": t.spline.degree,
            "input_transform": t.spline.input_transform,
            "interior_knots": [float(k) for k in t.spline.interior_knots],
            "boundary_knots": [float(t.spline.boundary_knots[0]), float(t.spline.boundary_knots[1])],
        }
    if t.gate is not None:
        d["gate"] = {"feature": t.gate.feature, "value": float(t.gate.value), "negate": t.gate.negate}
    return d


def _term_from_dict(d: dict) -> Term:
    spec = None
    if "spline" in d:
        s = d["spline"]
        spec = SplineSpec(
            df=s["df"],
            degree=s["degree"],
            input_transform=s["input_transform"],
            interior_knots=tuple(s["interior_knots"]),
            boundary_knots=(s["boundary_knots"][0], s["boundary_knots"][1]),
        )
    gate = None
    if "gate" in d:
        g = d["gate"]
        gate = Gate(feature=g["feature"], value=g["value"], negate=g["negate"])
    return Term(
        kind=d["kind"],
        feature=d.get("feature", ""),
        feature2=d.get("feature2", ""),
        transform=d.get("transform", "identity"),
        power=d.get("power", 1),
        spline=spec,
        gate=gate,
    )


def _expit(eta: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(eta, -MAX_ETA, MAX_ETA)))


def _separation_message(xk, beta, labels, kept, max_iter) -> str:
    sd = xk.std(axis=0)
    sd[sd == 0] = 1.0
    worst = int(np.argmax(np.abs(beta) * sd))
    kept_labels = [lbl for lbl, k in zip(labels, kept) if k]
    return (
        f"complete separation detected within {max_iter} iterations; offending "
        f"direction appears to be {kept_labels[worst]!r} (|coef|={abs(beta[worst]):.3g})"
    )


def _select_columns(xw: np.ndarray, labels: list[str], on_rank_deficiency: str) -> np.ndarray:
    """Pick a maximal independent column subset via pivoted QR."""
    n, p = xw.shape
    if n < p:
        raise RankError(f"need at least as many rows ({n}) as columns ({p})")
    _, r, piv = qr(xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        raise RankError("design matrix is all zeros")
    tol = diag[0] * max(xw.shape) * np.finfo(float).eps
    rank = int(np.sum(diag > tol))
    kept = np.zeros(p, dtype=bool)
    kept[piv[:rank]] = True
    if rank < p:
        dropped = [labels[j] for j in sorted(piv[rank:])]
        if on_rank_deficiency == "error":
            raise RankError(f"rank-deficient design; dependent columns: {dropped}")
        msg = f"dropping {p - rank} collinear column(s): {dropped}"
        warnings.warn(msg)
        logger.warning(msg)
    return kept


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    sw = np.sqrt(w)
    q, r = qr(x * sw[:, None], mode="economic")
    return solve_triangular(r, q.T @ (y * sw))


def fit_ols(
    terms: list[Term],
    data: dict[str, np.ndarray],
    y,
    weights=None,
    on_rank_deficiency: str = "drop",
) -> GlmModel:
    """Weighted least squares over the term design."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise GlmError("weights must be non-negative")
    x = design_matrix(terms, data)
    labels = design_labels(terms)
    kept = _select_columns(x * np.sqrt(w)[:, None], labels, on_rank_deficiency)
    beta = np.zeros(x.shape[1])
    beta[kept] = _wls(x[:, kept], y, w)
    return GlmModel(terms=terms, coefficients=beta, link="identity", kept=kept, labels=labels)


def fit_logistic(
    terms: list[Term],
    data: dict[str, np.ndarray],
    y,
    weights=None,
    max_iter: int = 100,
    score_tol: float = 1e-8,
    deviance_rtol: float = 1e-10,
    on_rank_deficiency: str = "drop",
) -> GlmModel:
    """Logistic regression by iteratively reweighted least squares."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise GlmError("weights must be non-negative")
    pos = float(np.sum(w * y))
    neg = float(np.sum(w * (1.0 - y)))
    if pos <= 0.0 or neg <= 0.0:
        raise SeparationError("both outcome classes must be present with positive weight")

    x = design_matrix(terms, data)
    labels = design_labels(terms)
    kept = _select_columns(x * np.sqrt(w)[:, None], labels, on_rank_deficiency)
    xk = x[:, kept]

    beta = np.zeros(xk.shape[1])
    deviance = np.inf
    active = w > 0
    for it in range(1, max_iter + 1):
        eta_raw = xk @ beta
        # Every observation classified perfectly with a huge margin means the
        # likelihood is unbounded: complete separation, no MLE.
        if it > 1 and np.min(((2.0 * y - 1.0) * eta_raw)[active]) > 12.0:
            raise SeparationError(_separation_message(xk, beta, labels, kept, max_iter))
        eta = np.clip(eta_raw, -MAX_ETA, MAX_ETA)
        p = _expit(eta)
        score = xk.T @ (w * (y - p))
        new_dev = -2.0 * float(np.sum(w * (y * np.log(p) + (1.0 - y) * np.log1p(-p))))
        if np.max(np.abs(score)) < score_tol:
            deviance = new_dev
            break
        if np.isfinite(deviance) and abs(deviance - new_dev) <= deviance_rtol * (abs(deviance) + 1e-300):
            deviance = new_dev
            break
        deviance = new_dev
        irls_w = w * p * (1.0 - p)
        # Working response; guarded where p(1-p) underflows.
        pq = np.maximum(p * (1.0 - p), 1e-10)
        z = eta + (y - p) / pq
        beta = _wls(xk, z, np.maximum(irls_w, w * 1e-10))
    else:
        if np.max(np.abs(beta)) > 1e3:
            raise SeparationError(_separation_message(xk, beta, labels, kept, max_iter))
        raise ConvergenceError(
            f"IRLS did not converge in {max_iter} iterations "
            f"(max |score|={np.max(np.abs(score)):.3g}, deviance={deviance:.6g})"
        )

    full = np.zeros(x.shape[1])
    full[kept] = beta
    return GlmModel(
        terms=terms, coefficients=full, link="logit", kept=kept, labels=labels,
        n_iter=it, converged=True,
    )
