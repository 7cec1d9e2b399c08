"""Fourth-down transition models.

Five GLMs: punt expected next yardline, field-goal make probability,
conversion probability, and expected yards gained given a successful or a
failed conversion attempt. Designs follow the published equations
exactly, including the mixed use of log(ydstogo) in the success-yards
model versus log(ydstogo + 1) elsewhere.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from . import glm
from .splines import spec_from_data

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

SYNTHETIC_MISS_COUNT = 500
SYNTHETIC_MISS_RANGE = (51, 99)

# Inference-time punt clamp: the model is trained only beyond the 30.
PUNT_YARDLINE_RANGE = (31.0, 99.0)


class TransitionError(RuntimeError):
    pass


@dataclass
class TransitionBundle:
    punt_model: glm.GlmModel
    fg_model: glm.GlmModel
    conv_model: glm.GlmModel
    conv_success_yards: glm.GlmModel
    conv_failure_yards: glm.GlmModel

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "punt_model": self.punt_model.to_dict(),
            "fg_model": self.fg_model.to_dict(),
            "conv_model": self.conv_model.to_dict(),
            "conv_success_yards": self.conv_success_yards.to_dict(),
            "conv_failure_yards": self.conv_failure_yards.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransitionBundle":
        if d.get("format_version") != FORMAT_VERSION:
            raise TransitionError(f"unsupported bundle format version {d.get('format_version')}")
        return cls(
            punt_model=glm.GlmModel.from_dict(d["punt_model"]),
            fg_model=glm.GlmModel.from_dict(d["fg_model"]),
            conv_model=glm.GlmModel.from_dict(d["conv_model"]),
            conv_success_yards=glm.GlmModel.from_dict(d["conv_success_yards"]),
            conv_failure_yards=glm.GlmModel.from_dict(d["conv_failure_yards"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, s: str) -> "TransitionBundle":
        return cls.from_dict(json.loads(s))


def fit_punt(yardline, pq, next_yardline, weights=None) -> glm.GlmModel:
    """Expected next yardline after a punt: spline in yardline plus punter
    quality main effect and its interaction with yardline."""
    yardline = np.asarray(yardline, dtype=float)
    if yardline.size == 0:
        raise TransitionError("empty punt pool")
    if np.any(yardline <= 30):
        raise TransitionError("punt pool must lie beyond the 30 yardline")
    spec = spec_from_data(yardline, df=4)
    terms = [
        glm.spline("yardline", spec),
        glm.linear("pq"),
        glm.interaction("pq", "yardline"),
    ]
    data = {"yardline": yardline, "pq": np.asarray(pq, dtype=float)}
    return glm.fit_ols(terms, data, np.asarray(next_yardline, dtype=float), weights=weights)


def fit_fg(
    yardline,
    kq,
    made,
    weights=None,
    synthetic_misses: dict | None = None,
) -> glm.GlmModel:
    """Field-goal make probability: spline in yardline plus kicker quality.

    Imputes synthetic missed kicks uniformly over long range so predicted
    make probabilities shrink to zero where kicks are never observed.
    Synthetic rows carry league-average kicker quality (kq = 0).
    """
    cfg = {"count": SYNTHETIC_MISS_COUNT, "yardline_range": SYNTHETIC_MISS_RANGE, "seed": 0}
    if synthetic_misses:
        cfg.update(synthetic_misses)
    yardline = np.asarray(yardline, dtype=float)
    kq = np.asarray(kq, dtype=float)
    made = np.asarray(made, dtype=float)
    if yardline.size == 0:
        raise TransitionError("empty field-goal pool")
    w = np.ones(yardline.size) if weights is None else np.asarray(weights, dtype=float)

    n_syn = int(cfg["count"])
    if n_syn > 0:
        lo, hi = cfg["yardline_range"]
        rng = np.random.default_rng(cfg["seed"])
        syn_yard = rng.integers(int(lo), int(hi) + 1, size=n_syn).astype(float)
        yardline = np.concatenate([yardline, syn_yard])
        kq = np.concatenate([kq, np.zeros(n_syn)])
        made = np.concatenate([made, np.zeros(n_syn)])
        w = np.concatenate([w, np.ones(n_syn)])

    spec = spec_from_data(yardline, df=5)
    terms = [glm.spline("yardline", spec), glm.linear("kq")]
    return glm.fit_logistic(terms, {"yardline": yardline, "kq": kq}, made, weights=w)


def _conversion_designs(ydstogo, yardline):
    """Shared knot layouts for the conversion designs, from the full pool."""
    z = np.asarray(ydstogo, dtype=float)
    y = np.asarray(yardline, dtype=float)
    return {
        "z_log1p_df4": spec_from_data(z, df=4, input_transform="log1p"),
        "z_log_df4": spec_from_data(z, df=4, input_transform="log"),
        "y_df3": spec_from_data(y, df=3, degree=2),
        "y_df4": spec_from_data(y, df=4),
    }


def fit_conversion_probability(down, ydstogo, delta_tq, converted, weights=None) -> glm.GlmModel:
    """P(gain at least ydstogo): per-down spline blocks in log(ydstogo+1),
    a shared intercept, and the team-quality edge."""
    z = np.asarray(ydstogo, dtype=float)
    if z.size == 0:
        raise TransitionError("empty conversion pool")
    spec = spec_from_data(z, df=4, input_transform="log1p")
    terms = [
        glm.spline("ydstogo", spec, gate=glm.Gate("down", 4.0)),
        glm.spline("ydstogo", spec, gate=glm.Gate("down", 3.0)),
        glm.intercept(),
        glm.linear("delta_tq"),
    ]
    data = {
        "ydstogo": z,
        "down": np.asarray(down, dtype=float),
        "delta_tq": np.asarray(delta_tq, dtype=float),
    }
    return glm.fit_logistic(terms, data, np.asarray(converted, dtype=float), weights=weights)


def fit_success_yards(down, ydstogo, yardline, delta_tq, yards_gained, weights=None) -> glm.GlmModel:
    """Expected gain given success. Note the log(ydstogo) transform (no +1)
    and the one-yard-to-go yardline spline switch, both as published."""
    z = np.asarray(ydstogo, dtype=float)
    if z.size == 0:
        raise TransitionError("no successful conversions to fit on")
    y = np.asarray(yardline, dtype=float)
    z_spec = spec_from_data(z, df=4, input_transform="log")
    y3 = spec_from_data(y, df=3, degree=2)
    y4 = spec_from_data(y, df=4)
    terms = [
        glm.spline("ydstogo", z_spec, gate=glm.Gate("down", 4.0)),
        glm.spline("ydstogo", z_spec, gate=glm.Gate("down", 3.0)),
        glm.spline("yardline", y3, gate=glm.Gate("ydstogo", 1.0)),
        glm.spline("yardline", y4, gate=glm.Gate("ydstogo", 1.0, negate=True)),
        glm.intercept(),
        glm.linear("delta_tq"),
    ]
    data = {
        "ydstogo": z,
        "down": np.asarray(down, dtype=float),
        "yardline": y,
        "delta_tq": np.asarray(delta_tq, dtype=float),
    }
    return glm.fit_ols(terms, data, np.asarray(yards_gained, dtype=float), weights=weights)


def fit_failure_yards(down, ydstogo, delta_tq, yards_gained, weights=None) -> glm.GlmModel:
    """Expected gain given failure: per-down linear terms in log(ydstogo+1)."""
    z = np.asarray(ydstogo, dtype=float)
    if z.size == 0:
        raise TransitionError("no failed conversions to fit on")
    terms = [
        glm.linear("ydstogo", transform="log1p", gate=glm.Gate("down", 4.0)),
        glm.linear("ydstogo", transform="log1p", gate=glm.Gate("down", 3.0)),
        glm.intercept(),
        glm.linear("delta_tq"),
    ]
    data = {
        "ydstogo": z,
        "down": np.asarray(down, dtype=float),
        "delta_tq": np.asarray(delta_tq, dtype=float),
    }
    return glm.fit_ols(terms, data, np.asarray(yards_gained, dtype=float), weights=weights)


def fit_transition_bundle(
    punt: dict,
    fg: dict,
    conversion: dict,
    synthetic_misses: dict | None = None,
) -> TransitionBundle:
    """Fit all five models from pool column dicts.

    punt: yardline, pq, next_yardline [, weights]
    fg: yardline, kq, made [, weights]
    conversion: down, ydstogo, yardline, delta_tq, yards_gained [, weights]
    """
    conv_z = np.asarray(conversion["ydstogo"], dtype=float)
    conv_gain = np.asarray(conversion["yards_gained"], dtype=float)
    converted = conv_gain >= conv_z
    conv_w = conversion.get("weights")
    conv_w = None if conv_w is None else np.asarray(conv_w, dtype=float)

    def _sub(mask, key):
        return np.asarray(conversion[key], dtype=float)[mask]

    succ = converted
    fail = ~converted
    if not np.any(succ) or not np.any(fail):
        raise TransitionError("conversion pool needs both successes and failures")

    return TransitionBundle(
        punt_model=fit_punt(
            punt["yardline"], punt["pq"], punt["next_yardline"], weights=punt.get("weights")
        ),
        fg_model=fit_fg(
            fg["yardline"], fg["kq"], fg["made"], weights=fg.get("weights"),
            synthetic_misses=synthetic_misses,
        ),
        conv_model=fit_conversion_probability(
            conversion["down"], conv_z, conversion["delta_tq"], converted, weights=conv_w
        ),
        conv_success_yards=fit_success_yards(
            _sub(succ, "down"), conv_z[succ], _sub(succ, "yardline"),
            _sub(succ, "delta_tq"), conv_gain[succ],
            weights=None if conv_w is None else conv_w[succ],
        ),
        conv_failure_yards=fit_failure_yards(
            _sub(fail, "down"), conv_z[fail], _sub(fail, "delta_tq"), conv_gain[fail],
            weights=None if conv_w is None else conv_w[fail],
        ),
    )


def punt_expected_next_yardline(bundle: TransitionBundle, yardline, pq) -> np.ndarray:
    y = np.clip(np.asarray(yardline, dtype=float), *PUNT_YARDLINE_RANGE)
    return bundle.punt_model.predict({"yardline": y, "pq": np.asarray(pq, dtype=float)})


def fg_make_probability(bundle: TransitionBundle, yardline, kq) -> np.ndarray:
    data = {"yardline": np.asarray(yardline, dtype=float), "kq": np.asarray(kq, dtype=float)}
    return bundle.fg_model.predict(data)


def conversion_probability(bundle: TransitionBundle, ydstogo, down, delta_tq) -> np.ndarray:
    data = {
        "ydstogo": np.asarray(ydstogo, dtype=float),
        "down": np.asarray(down, dtype=float),
        "delta_tq": np.asarray(delta_tq, dtype=float),
    }
    return bundle.conv_model.predict(data)


def expected_yards_given_success(bundle, ydstogo, down, yardline, delta_tq) -> np.ndarray:
    data = {
        "ydstogo": np.asarray(ydstogo, dtype=float),
        "down": np.asarray(down, dtype=float),
        "yardline": np.asarray(yardline, dtype=float),
        "delta_tq": np.asarray(delta_tq, dtype=float),
    }
    return bundle.conv_success_yards.predict(data)


def expected_yards_given_failure(bundle, ydstogo, down, delta_tq) -> np.ndarray:
    data = {
        "ydstogo": np.asarray(ydstogo, dtype=float),
        "down": np.asarray(down, dtype=float),
        "delta_tq": np.asarray(delta_tq, dtype=float),
    }
    return bundle.conv_failure_yards.predict(data)
