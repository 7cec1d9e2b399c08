"""Baseline model of actual coach fourth-down decisions, and the
agreement evaluation over plays where the engine is confident.

The era buckets here are finer than the ingestion-level era grouping
(1999-2001, 2002-2005, 2006-2013, 2014-2017, 2018-present) and are
derived from season when available.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from . import bootstrap as boot_mod
from .boosting import BoostError, GbtParams, MulticlassGbt, fit_gbt_multiclass, logloss
from .bootstrap import BootstrapEnsemble, play_to_state, uncertainty_batch
from .ingest import DECISIONS

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

COACH_FEATURES = [
    "yardline", "ydstogo", "game_seconds_remaining", "score_differential",
    "posteam_spread", "era_code",
]

_COACH_ERA_BOUNDS = [(2001, 0), (2005, 1), (2013, 2), (2017, 3)]
_COACH_ERA_LATEST = 4

# Ingestion-level era labels cannot distinguish 1999-2001 from 2002-2005;
# the coarse label maps onto the later of the two.
_ERA_LABEL_TO_CODE = {
    "1999-2005": 1,
    "2006-2013": 2,
    "2014-2017": 3,
    "2018-2022": 4,
}

KICK_DECISIONS = ("field_goal", "punt")


def coach_era_code(season: int | None, era_label: str = "") -> int:
    if season is not None:
        for bound, code in _COACH_ERA_BOUNDS:
            if season <= bound:
                return code
        return _COACH_ERA_LATEST
    return _ERA_LABEL_TO_CODE.get(era_label, _COACH_ERA_LATEST)


def _design(plays) -> np.ndarray:
    rows = []
    for p in plays:
        rows.append([
            p.yardline, p.ydstogo, p.game_seconds_remaining, p.score_differential,
            p.posteam_spread, coach_era_code(p.season, p.era),
        ])
    return np.asarray(rows, dtype=float)


@dataclass
class CoachModel:
    """Multiclass boosted trees over {go, field_goal, punt}."""

    gbt: MulticlassGbt
    class_logloss: dict[str, float]

    @property
    def classes(self) -> list[str]:
        return self.gbt.classes

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.gbt.predict_proba(x)

    def probs_for_state(self, state, season: int | None = None) -> dict[str, float]:
        x = np.asarray([[
            state.yardline, state.ydstogo, state.game_seconds_remaining,
            state.score_differential, state.posteam_spread, coach_era_code(season),
        ]], dtype=float)
        p = self.predict_proba(x)[0]
        return {c: float(v) for c, v in zip(self.classes, p)}

    def feature_importance(self) -> dict[str, float]:
        return self.gbt.feature_importance()

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "gbt": self.gbt.to_dict(),
            "class_logloss": self.class_logloss,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoachModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise BoostError("unsupported coach model format version")
        return cls(gbt=MulticlassGbt.from_dict(d["gbt"]), class_logloss=d["class_logloss"])

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "CoachModel":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.loads(f.read()))


def fit_coach(fourth_down_pool, params: GbtParams | None = None) -> CoachModel:
    """Fit decision probabilities on fourth-down plays labeled with the
    decision actually taken."""
    pool = [p for p in fourth_down_pool if p.play_type in DECISIONS]
    if not pool:
        raise BoostError("no labeled fourth-down decisions to fit on")
    x = _design(pool)
    labels = np.asarray([p.play_type for p in pool])
    prm = params or GbtParams(max_depth=4, learning_rate=0.1, n_rounds=120, min_child_weight=5.0)
    gbt = fit_gbt_multiclass(x, labels, list(DECISIONS), COACH_FEATURES, prm)
    probs = gbt.predict_proba(x)
    class_ll = {}
    for k, cls_name in enumerate(DECISIONS):
        y_bin = (labels == cls_name).astype(float)
        class_ll[cls_name] = logloss(y_bin, probs[:, k])
    logger.info("coach model fit on %d plays; per-class logloss %s", len(pool), class_ll)
    return CoachModel(gbt=gbt, class_logloss=class_ll)


def importance_rows(model: CoachModel) -> list[dict]:
    imp = model.feature_importance()
    rows = [{"feature": k, "gain_share": float(v)} for k, v in imp.items()]
    rows.sort(key=lambda r: -r["gain_share"])
    return rows


def coach_agreement(
    fourth_downs,
    ensemble: BootstrapEnsemble,
    coach_model: CoachModel | None = None,
    level: float = 0.9,
) -> dict:
    """Per-coach agreement with the engine on confident plays only.

    agreement = share of a coach's confident plays where the actual
    decision matches the point-model decision. Also reports the global
    split by what the model recommends (kick vs go). Coaches with no
    confident plays are excluded and listed.
    """
    plays = [p for p in fourth_downs if p.play_type in DECISIONS]
    states = [play_to_state(p) for p in plays]
    reports = uncertainty_batch(states, ensemble, level=level)

    confident = [
        (p, r) for p, r in zip(plays, reports) if r.bin == boot_mod.BIN_CONFIDENT
    ]
    per_coach: dict[str, dict] = {}
    n_kick = n_kick_agree = n_go = n_go_agree = 0
    for p, r in confident:
        agree = p.play_type == r.decision
        row = per_coach.setdefault(p.posteam_coach, {"confident_plays": 0, "agreements": 0})
        row["confident_plays"] += 1
        row["agreements"] += 1 if agree else 0
        if r.decision in KICK_DECISIONS:
            n_kick += 1
            n_kick_agree += 1 if agree else 0
        else:
            n_go += 1
            n_go_agree += 1 if agree else 0

    coaches_seen = {p.posteam_coach for p in plays}
    excluded = sorted(coaches_seen - set(per_coach))
    table = [
        {
            "coach": coach,
            "confident_plays": row["confident_plays"],
            "agreement": row["agreements"] / row["confident_plays"],
        }
        for coach, row in per_coach.items()
    ]
    table.sort(key=lambda r: (-r["agreement"], r["coach"]))
    total_conf = sum(r["confident_plays"] for r in table)
    global_agreement = (
        sum(r["agreement"] * r["confident_plays"] for r in table) / total_conf
        if total_conf else float("nan")
    )
    return {
        "table": table,
        "excluded_coaches": excluded,
        "n_confident": total_conf,
        "global_agreement": global_agreement,
        "agreement_when_model_says_kick": n_kick_agree / n_kick if n_kick else float("nan"),
        "agreement_when_model_says_go": n_go_agree / n_go if n_go else float("nan"),
        "level": level,
    }
