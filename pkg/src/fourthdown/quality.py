"""Specialist and team quality metrics.

Kicker quality is an exponentially decayed, shrunken running mean of field
goal probability added (FGPA); punter quality does the same with punt
yards over expected (PYOE). Team quality difference is derived from the
pre-game market (total line and spread). All three are standardized
against the training population and frozen for inference.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import glm

logger = logging.getLogger(__name__)

KICKER_GAMMA = 96.0
KICKER_ALPHA = 0.985
PUNTER_GAMMA = 150.0
PUNTER_ALPHA = 0.99


class QualityError(RuntimeError):
    pass


@dataclass(frozen=True)
class Standardizer:
    """Frozen mean/sd from a training population.

    A zero-spread population standardizes to all zeros (league average)
    instead of dividing by zero.
    """

    mean: float
    sd: float

    @classmethod
    def fit(cls, values) -> "Standardizer":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls(0.0, 1.0)
        sd = float(v.std())
        return cls(float(v.mean()), sd if sd > 1e-12 else 1.0)

    def apply(self, values):
        return (np.asarray(values, dtype=float) - self.mean) / self.sd


def fit_baseline_fg(yardline, made, weights=None) -> glm.GlmModel:
    """Kicker-agnostic make-probability baseline: logistic with a cubic
    polynomial in yardline."""
    made = np.asarray(made, dtype=float)
    if made.size == 0:
        raise QualityError("empty field-goal pool")
    data = {"yardline": np.asarray(yardline, dtype=float)}
    terms = _cubic_terms("yardline")
    return glm.fit_logistic(terms, data, made, weights=weights)


def fit_baseline_punt(yardline, next_yardline, weights=None) -> glm.GlmModel:
    """Punter-agnostic expected-next-yardline baseline: OLS cubic polynomial."""
    y = np.asarray(next_yardline, dtype=float)
    if y.size == 0:
        raise QualityError("empty punt pool")
    data = {"yardline": np.asarray(yardline, dtype=float)}
    return glm.fit_ols(_cubic_terms("yardline"), data, y, weights=weights)


def _cubic_terms(feat: str) -> list[glm.Term]:
    return [
        glm.intercept(),
        glm.linear(feat),
        glm.linear(feat, power=2),
        glm.linear(feat, power=3),
    ]


def fgpa(made, baseline_prob) -> np.ndarray:
    """Field goal probability added: made indicator minus baseline make prob."""
    return np.asarray(made, dtype=float) - np.asarray(baseline_prob, dtype=float)


def pyoe(actual_next_yardline, predicted_next_yardline) -> np.ndarray:
    """Punt yards over expected: actual minus baseline-predicted next yardline."""
    return np.asarray(actual_next_yardline, dtype=float) - np.asarray(
        predicted_next_yardline, dtype=float
    )


def rolling_quality(residuals, gamma: float, alpha: float) -> np.ndarray:
    """Quality before each attempt: decayed shrunken mean of prior residuals.

    quality[n] = sum_{j<n} alpha^(n-1-j) r_j / (gamma + sum_{j<n} alpha^(n-1-j)),
    and quality[0] = 0. Uses only residuals strictly before each index.
    """
    if gamma <= 0:
        raise QualityError("gamma must be positive")
    if not 0 < alpha <= 1:
        raise QualityError("alpha must be in (0, 1]")
    r = np.asarray(residuals, dtype=float)
    out = np.zeros(r.size)
    num = 0.0
    den = 0.0
    for n in range(1, r.size):
        num = alpha * num + r[n - 1]
        den = alpha * den + 1.0
        out[n] = num / (gamma + den)
    return out


def team_quality_raw(total_line, spread) -> tuple[np.ndarray, np.ndarray]:
    """Market-implied quality edges, pre-standardization.

    Offense-vs-defense edge is (TP - PS)/2; the opponent's analogue is
    (TP + PS)/2, with PS relative to the possession team.
    """
    tp = np.asarray(total_line, dtype=float)
    ps = np.asarray(spread, dtype=float)
    return (tp - ps) / 2.0, (tp + ps) / 2.0


@dataclass
class QualityModel:
    """Fitted quality pipeline: baselines plus frozen standardizers."""

    fg_baseline: glm.GlmModel | None
    punt_baseline: glm.GlmModel | None
    kq_standardizer: Standardizer
    pq_standardizer: Standardizer
    tq_standardizer: Standardizer
    kicker_gamma: float = KICKER_GAMMA
    kicker_alpha: float = KICKER_ALPHA
    punter_gamma: float = PUNTER_GAMMA
    punter_alpha: float = PUNTER_ALPHA

    def delta_tq(self, total_line, spread) -> tuple[np.ndarray, np.ndarray]:
        off_raw, def_raw = team_quality_raw(total_line, spread)
        return self.tq_standardizer.apply(off_raw), self.tq_standardizer.apply(def_raw)

    def to_dict(self) -> dict:
        return {
            "fg_baseline": self.fg_baseline.to_dict() if self.fg_baseline else None,
            "punt_baseline": self.punt_baseline.to_dict() if self.punt_baseline else None,
            "kq_standardizer": [self.kq_standardizer.mean, self.kq_standardizer.sd],
            "pq_standardizer": [self.pq_standardizer.mean, self.pq_standardizer.sd],
            "tq_standardizer": [self.tq_standardizer.mean, self.tq_standardizer.sd],
            "kicker_gamma": self.kicker_gamma,
            "kicker_alpha": self.kicker_alpha,
            "punter_gamma": self.punter_gamma,
            "punter_alpha": self.punter_alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QualityModel":
        return cls(
            fg_baseline=glm.GlmModel.from_dict(d["fg_baseline"]) if d["fg_baseline"] else None,
            punt_baseline=glm.GlmModel.from_dict(d["punt_baseline"]) if d["punt_baseline"] else None,
            kq_standardizer=Standardizer(*d["kq_standardizer"]),
            pq_standardizer=Standardizer(*d["pq_standardizer"]),
            tq_standardizer=Standardizer(*d["tq_standardizer"]),
            kicker_gamma=d["kicker_gamma"],
            kicker_alpha=d["kicker_alpha"],
            punter_gamma=d["punter_gamma"],
            punter_alpha=d["punter_alpha"],
        )


def per_player_quality(
    player_ids,
    residuals,
    gamma: float,
    alpha: float,
) -> np.ndarray:
    """Career rolling quality per player, preserving input (chronological) order.

    Rows must already be sorted chronologically; the rolling state never
    resets within a career.
    """
    ids = np.asarray(player_ids)
    r = np.asarray(residuals, dtype=float)
    out = np.zeros(r.size)
    for pid in np.unique(ids):
        idx = np.nonzero(ids == pid)[0]
        out[idx] = rolling_quality(r[idx], gamma, alpha)
    return out


def quality_table(player_ids, qualities) -> list[dict]:
    """Rows for the CSV export: player_id, attempt_index, quality."""
    ids = np.asarray(player_ids)
    q = np.asarray(qualities, dtype=float)
    rows = []
    counters: dict = {}
    for pid, val in zip(ids, q):
        n = counters.get(pid, 0)
        rows.append({"player_id": str(pid), "attempt_index": n, "quality": float(val)})
        counters[pid] = n + 1
    return rows
