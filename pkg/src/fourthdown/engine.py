"""Fourth-down decision engine.

Composes first-down win probability with the transition models into the
win probability of each decision, picks the best available decision, and
reports the effect size (gain over the runner-up). Evaluation is pure and
batched: all branch queries for a set of states go through one WP call.

Conventions: yardline is always yards to the opponent endzone; flipped
states negate score and spread, swap timeouts and team-quality sides,
complement the second-half-kickoff flag, keep the clock, and give the
opponent league-average specialists.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import quality as quality_mod
from . import transitions as trans_mod
from .boosting import GbtParams
from .ingest import filter_training_pools
from .quality import QualityModel, Standardizer
from .transitions import TransitionBundle
from .wpmodel import WpModel, fit_wp_model

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

GO, FG, PUNT = "go", "field_goal", "punt"
DECISION_ORDER = (GO, FG, PUNT)

KICKOFF_SPOT = 75.0
TD_POINTS = 7
FG_POINTS = 3


class EngineError(RuntimeError):
    pass


class InvalidState(ValueError):
    pass


@dataclass(frozen=True)
class FourthDownState:
    """Decision context. Quality metrics are standardized (0 = league
    average); delta_tq sides default to market-derived values when None."""

    yardline: int
    ydstogo: int
    game_seconds_remaining: int
    score_differential: int
    posteam_spread: float = 0.0
    total_points_line: float = 44.0
    posteam_timeouts: int = 3
    defteam_timeouts: int = 3
    receive_2h_ko: int = 0
    home: int = 0
    total_score: int = 0
    kq: float = 0.0
    pq: float = 0.0
    delta_tq_off: float | None = None
    delta_tq_def: float | None = None

    def validate(self) -> None:
        if not 1 <= self.yardline <= 99:
            raise InvalidState(f"yardline {self.yardline} outside [1, 99]")
        if self.ydstogo < 1:
            raise InvalidState("ydstogo must be at least 1")
        if self.ydstogo > self.yardline:
            raise InvalidState("ydstogo exceeds yardline")
        if not 1 <= self.game_seconds_remaining <= 3600:
            raise InvalidState("game_seconds_remaining outside [1, 3600]")
        if self.posteam_timeouts not in (0, 1, 2, 3) or self.defteam_timeouts not in (0, 1, 2, 3):
            raise InvalidState("timeouts must be in {0..3}")
        if self.receive_2h_ko not in (0, 1):
            raise InvalidState("receive_2h_ko must be binary")
        if self.total_score < 0:
            raise InvalidState("total_score must be non-negative")


@dataclass
class DecisionValues:
    wp_go: float
    wp_fg: float | None
    wp_punt: float | None
    best: str
    effect_size: float | None
    detail: dict = field(default_factory=dict)

    def wp_of(self, decision: str) -> float | None:
        return {GO: self.wp_go, FG: self.wp_fg, PUNT: self.wp_punt}[decision]

    def available(self) -> list[str]:
        return [d for d in DECISION_ORDER if self.wp_of(d) is not None]


@dataclass(frozen=True)
class EngineConfig:
    punt_available_above: int = 30  # punt iff yardline > this
    fg_available_upto: int = 50  # field goal iff yardline <= this


def _state_features(states: list[FourthDownState]) -> dict[str, np.ndarray]:
    get = lambda name: np.asarray([getattr(s, name) for s in states], dtype=float)
    return {
        "score_differential": get("score_differential"),
        "game_seconds_remaining": get("game_seconds_remaining"),
        "posteam_spread": get("posteam_spread"),
        "yardline": get("yardline"),
        "receive_2h_ko": get("receive_2h_ko"),
        "posteam_timeouts": get("posteam_timeouts"),
        "defteam_timeouts": get("defteam_timeouts"),
        "total_score": get("total_score"),
    }


def flip_state(features: dict[str, np.ndarray], points_scored, next_yardline) -> dict[str, np.ndarray]:
    """First-down features for the opponent after the offense scored
    points_scored (0, 3, or 7) and the ball moves to next_yardline in the
    opponent's frame. The clock is deliberately left unchanged."""
    pts = np.asarray(points_scored, dtype=float)
    return {
        "score_differential": -(features["score_differential"] + pts),
        "game_seconds_remaining": features["game_seconds_remaining"],
        "posteam_spread": -features["posteam_spread"],
        "yardline": np.broadcast_to(np.asarray(next_yardline, dtype=float),
                                    features["yardline"].shape).copy(),
        "receive_2h_ko": 1.0 - features["receive_2h_ko"],
        "posteam_timeouts": features["defteam_timeouts"],
        "defteam_timeouts": features["posteam_timeouts"],
        "total_score": features["total_score"] + pts,
    }


def _with_yardline(features: dict[str, np.ndarray], yardline) -> dict[str, np.ndarray]:
    out = dict(features)
    out["yardline"] = np.broadcast_to(np.asarray(yardline, dtype=float),
                                      features["yardline"].shape).copy()
    return out


def _clamp_yardline(y) -> np.ndarray:
    return np.clip(np.asarray(y, dtype=float), 1.0, 99.0)


@dataclass
class DecisionModel:
    """Immutable fitted bundle: WP model, transition models, quality."""

    wp_model: WpModel
    transitions: TransitionBundle
    quality: QualityModel
    config: EngineConfig = field(default_factory=EngineConfig)

    def wp1(self, features: dict[str, np.ndarray]) -> np.ndarray:
        return self.wp_model.predict_wp1(features)

    def resolve_delta_tq(self, state: FourthDownState) -> tuple[float, float]:
        if state.delta_tq_off is not None and state.delta_tq_def is not None:
            return state.delta_tq_off, state.delta_tq_def
        off, dfn = self.quality.delta_tq([state.total_points_line], [state.posteam_spread])
        return (
            state.delta_tq_off if state.delta_tq_off is not None else float(off[0]),
            state.delta_tq_def if state.delta_tq_def is not None else float(dfn[0]),
        )

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "wp_model": self.wp_model.to_dict(),
            "transitions": self.transitions.to_dict(),
            "quality": self.quality.to_dict(),
            "config": {
                "punt_available_above": self.config.punt_available_above,
                "fg_available_upto": self.config.fg_available_upto,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise EngineError(f"unsupported model format version {d.get('format_version')}")
        return cls(
            wp_model=WpModel.from_dict(d["wp_model"]),
            transitions=TransitionBundle.from_dict(d["transitions"]),
            quality=QualityModel.from_dict(d["quality"]),
            config=EngineConfig(**d["config"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, s: str) -> "DecisionModel":
        return cls.from_dict(json.loads(s))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path) -> "DecisionModel":
        with open(path, "r", encoding="utf-8") as f:
            return cls.loads(f.read())


def wp_punt(state: FourthDownState, bundle: TransitionBundle, wp1) -> float:
    """Win probability of punting: one minus the opponent's first-down WP
    at the expected next yardline."""
    feats = _state_features([state])
    exp_next = trans_mod.punt_expected_next_yardline(bundle, [state.yardline], [state.pq])
    opp = flip_state(feats, 0.0, _clamp_yardline(exp_next))
    return float(1.0 - np.asarray(wp1(opp), dtype=float)[0])


def wp_fg(state: FourthDownState, bundle: TransitionBundle, wp1) -> float:
    """Field-goal win probability: make/miss mixture."""
    feats = _state_features([state])
    p_make = float(trans_mod.fg_make_probability(bundle, [state.yardline], [state.kq])[0])
    make_wp = float(1.0 - np.asarray(wp1(flip_state(feats, FG_POINTS, KICKOFF_SPOT)), dtype=float)[0])
    miss_spot = _clamp_yardline(min(80.0, 100.0 - (state.yardline + 7.0)))
    miss_wp = float(1.0 - np.asarray(wp1(flip_state(feats, 0.0, miss_spot)), dtype=float)[0])
    return p_make * make_wp + (1.0 - p_make) * miss_wp


def wp_go(state: FourthDownState, bundle: TransitionBundle, wp1, delta_tq: float = 0.0) -> float:
    """Conversion-attempt win probability: success/failure mixture; the
    success branch keeps possession (no flip) unless the expected spot
    crosses the goal line, which is treated as a touchdown."""
    feats = _state_features([state])
    p = float(trans_mod.conversion_probability(bundle, [state.ydstogo], [4.0], [delta_tq])[0])
    e_succ = float(trans_mod.expected_yards_given_success(
        bundle, [state.ydstogo], [4.0], [state.yardline], [delta_tq])[0])
    e_fail = float(trans_mod.expected_yards_given_failure(
        bundle, [state.ydstogo], [4.0], [delta_tq])[0])

    succ_spot = state.yardline - e_succ
    if succ_spot < 1.0:
        succ_wp = float(1.0 - np.asarray(wp1(flip_state(feats, TD_POINTS, KICKOFF_SPOT)), dtype=float)[0])
    else:
        succ_wp = float(np.asarray(wp1(_with_yardline(feats, _clamp_yardline(succ_spot))), dtype=float)[0])
    fail_spot = _clamp_yardline(100.0 - (state.yardline - e_fail))
    fail_wp = float(1.0 - np.asarray(wp1(flip_state(feats, 0.0, fail_spot)), dtype=float)[0])
    return p * succ_wp + (1.0 - p) * fail_wp


def evaluate_batch(
    states: list[FourthDownState],
    model: DecisionModel,
    wp1=None,
) -> list[DecisionValues]:
    """Evaluate many states with batched WP queries."""
    if not states:
        return []
    for s in states:
        s.validate()
    wp1 = wp1 or model.wp1
    bundle = model.transitions
    cfg = model.config
    n = len(states)
    feats = _state_features(states)
    y = feats["yardline"]
    z = np.asarray([s.ydstogo for s in states], dtype=float)
    kq = np.asarray([s.kq for s in states], dtype=float)
    pq = np.asarray([s.pq for s in states], dtype=float)
    dtq = np.asarray([model.resolve_delta_tq(s)[0] for s in states], dtype=float)
    fours = np.full(n, 4.0)

    p_conv = trans_mod.conversion_probability(bundle, z, fours, dtq)
    e_succ = trans_mod.expected_yards_given_success(bundle, z, fours, y, dtq)
    e_fail = trans_mod.expected_yards_given_failure(bundle, z, fours, dtq)
    p_make = trans_mod.fg_make_probability(bundle, y, kq)
    punt_exp = trans_mod.punt_expected_next_yardline(bundle, y, pq)

    # Six WP queries per state, one batched call.
    q_adv = _with_yardline(feats, _clamp_yardline(y - e_succ))           # go success, keep ball
    q_td = flip_state(feats, TD_POINTS, KICKOFF_SPOT)                    # go success past the goal line
    q_fail = flip_state(feats, 0.0, _clamp_yardline(100.0 - (y - e_fail)))
    q_make = flip_state(feats, FG_POINTS, KICKOFF_SPOT)
    q_miss = flip_state(feats, 0.0, _clamp_yardline(np.minimum(80.0, 100.0 - (y + 7.0))))
    q_punt = flip_state(feats, 0.0, _clamp_yardline(punt_exp))

    batched = {
        k: np.concatenate([q_adv[k], q_td[k], q_fail[k], q_make[k], q_miss[k], q_punt[k]])
        for k in q_adv
    }
    wp = np.asarray(wp1(batched), dtype=float).reshape(6, n)
    wp_advance, wp_td, wp_fail_q, wp_make_q, wp_miss_q, wp_punt_q = wp

    td_mask = (y - e_succ) < 1.0
    succ_wp = np.where(td_mask, 1.0 - wp_td, wp_advance)
    fail_wp = 1.0 - wp_fail_q
    v_go = p_conv * succ_wp + (1.0 - p_conv) * fail_wp
    v_fg = p_make * (1.0 - wp_make_q) + (1.0 - p_make) * (1.0 - wp_miss_q)
    v_punt = 1.0 - wp_punt_q

    out = []
    for i, s in enumerate(states):
        fg_ok = s.yardline <= cfg.fg_available_upto
        punt_ok = s.yardline > cfg.punt_available_above
        values = {GO: float(v_go[i])}
        if fg_ok:
            values[FG] = float(v_fg[i])
        if punt_ok:
            values[PUNT] = float(v_punt[i])
        ranked = sorted(values.items(), key=lambda kv: (-kv[1], DECISION_ORDER.index(kv[0])))
        best = ranked[0][0]
        g = ranked[0][1] - ranked[1][1] if len(ranked) > 1 else None
        out.append(DecisionValues(
            wp_go=float(v_go[i]),
            wp_fg=float(v_fg[i]) if fg_ok else None,
            wp_punt=float(v_punt[i]) if punt_ok else None,
            best=best,
            effect_size=g,
            detail={
                "p_conversion": float(p_conv[i]),
                "p_fg_make": float(p_make[i]),
                "punt_expected_next_yardline": float(punt_exp[i]),
                "wp_go_success": float(succ_wp[i]),
                "wp_go_failure": float(fail_wp[i]),
                "wp_fg_make": float(1.0 - wp_make_q[i]),
                "wp_fg_miss": float(1.0 - wp_miss_q[i]),
                "go_success_is_touchdown": bool(td_mask[i]),
            },
        ))
    return out


def evaluate(state: FourthDownState, model: DecisionModel, wp1=None) -> DecisionValues:
    return evaluate_batch([state], model, wp1=wp1)[0]


def boundary_grid(
    state_template: FourthDownState,
    y_range,
    z_range,
    model: DecisionModel,
    ensemble=None,
) -> list[dict]:
    """Decision map cells over (yardline, ydstogo); infeasible cells
    (ydstogo > yardline) come back empty. boot_pct appears only when an
    ensemble is supplied."""
    ys = list(y_range)
    zs = list(z_range)
    if not ys or not zs:
        raise EngineError("empty boundary grid ranges")
    cells = []
    feasible_states = []
    feasible_pos = []
    for yi in ys:
        for zi in zs:
            if zi <= yi:
                feasible_pos.append(len(cells))
                feasible_states.append(replace(state_template, yardline=int(yi), ydstogo=int(zi)))
            cells.append({"y": int(yi), "z": int(zi), "best": None,
                          "effect_size": None, "boot_pct": None})

    values = evaluate_batch(feasible_states, model)
    for pos, dv in zip(feasible_pos, values):
        cells[pos]["best"] = dv.best
        cells[pos]["effect_size"] = dv.effect_size

    if ensemble is not None:
        point_best = [dv.best for dv in values]
        agree = np.zeros(len(feasible_states))
        for rep in ensemble.replicates:
            rep_vals = evaluate_batch(feasible_states, rep)
            agree += [rv.best == pb for rv, pb in zip(rep_vals, point_best)]
        boot = 100.0 * agree / len(ensemble.replicates)
        for pos, bp in zip(feasible_pos, boot):
            cells[pos]["boot_pct"] = float(bp)
    return cells


@dataclass(frozen=True)
class FitConfig:
    """End-to-end fit configuration for a DecisionModel."""

    wp_params: GbtParams = GbtParams(
        max_depth=4, learning_rate=0.1, n_rounds=250,
        min_child_weight=5.0, early_stopping_patience=50,
    )
    use_grid: bool = False
    tune_fraction: float = 0.25
    synthetic_miss_count: int = trans_mod.SYNTHETIC_MISS_COUNT
    synthetic_miss_seed: int = 0
    punt_available_above: int = 30
    fg_available_upto: int = 50

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            punt_available_above=self.punt_available_above,
            fg_available_upto=self.fg_available_upto,
        )


def _chronological(pool):
    return sorted(pool, key=lambda p: (p.game_id, p.play_index))


def _fit_specialist_quality(pools, pool_weights):
    """Baselines, residuals, and career rolling qualities for kickers and
    punters. Rolling sequences follow the original chronology; only the
    baselines and standardizers see resample weights."""
    fg_pool = _chronological(pools.fg_pool)
    fg_w = pool_weights(fg_pool)
    fg_yard = np.asarray([p.yardline for p in fg_pool], dtype=float)
    fg_made = np.asarray([p.fg_made for p in fg_pool], dtype=float)
    fg_baseline = quality_mod.fit_baseline_fg(fg_yard, fg_made, weights=fg_w)
    fg_resid = quality_mod.fgpa(fg_made, fg_baseline.predict({"yardline": fg_yard}))
    kq_raw = quality_mod.per_player_quality(
        [p.kicker_id or "" for p in fg_pool], fg_resid,
        quality_mod.KICKER_GAMMA, quality_mod.KICKER_ALPHA,
    )

    punt_pool = _chronological(pools.punt_pool)
    punt_w = pool_weights(punt_pool)
    punt_yard = np.asarray([p.yardline for p in punt_pool], dtype=float)
    punt_next = np.asarray([p.next_yardline_after_punt for p in punt_pool], dtype=float)
    punt_baseline = quality_mod.fit_baseline_punt(punt_yard, punt_next, weights=punt_w)
    punt_resid = quality_mod.pyoe(punt_next, punt_baseline.predict({"yardline": punt_yard}))
    pq_raw = quality_mod.per_player_quality(
        [p.punter_id or "" for p in punt_pool], punt_resid,
        quality_mod.PUNTER_GAMMA, quality_mod.PUNTER_ALPHA,
    )
    return {
        "fg_pool": fg_pool, "fg_w": fg_w, "fg_yard": fg_yard, "fg_made": fg_made,
        "fg_baseline": fg_baseline, "kq_raw": kq_raw,
        "punt_pool": punt_pool, "punt_w": punt_w, "punt_yard": punt_yard,
        "punt_next": punt_next, "punt_baseline": punt_baseline, "pq_raw": pq_raw,
    }


def quality_tables(plays) -> tuple[list[dict], list[dict]]:
    """Per-attempt standardized quality rows (kicker, punter) for CSV
    export: player_id, attempt_index, quality."""
    pools = filter_training_pools(plays)
    q = _fit_specialist_quality(pools, lambda pool: None)
    kq_std = Standardizer.fit(q["kq_raw"])
    pq_std = Standardizer.fit(q["pq_raw"])
    kq_rows = quality_mod.quality_table(
        [p.kicker_id or "" for p in q["fg_pool"]], kq_std.apply(q["kq_raw"])
    )
    pq_rows = quality_mod.quality_table(
        [p.punter_id or "" for p in q["punt_pool"]], pq_std.apply(q["pq_raw"])
    )
    return kq_rows, pq_rows


def fit_decision_model(
    plays,
    config: FitConfig | None = None,
    weights=None,
    tune_plays=None,
    wp_grid=None,
) -> DecisionModel:
    """Fit the full bundle (quality, transitions, WP model) from plays.

    weights, when given, align with plays (fractional bootstrap support);
    quality baselines and standardizers are refit under the same weights,
    while career rolling sequences follow the original chronology.
    """
    config = config or FitConfig()
    w_by_id = None
    if weights is not None:
        w_arr = np.asarray(weights, dtype=float)
        if w_arr.shape[0] != len(plays):
            raise EngineError("weights must align with plays")
        w_by_id = {id(p): w_arr[i] for i, p in enumerate(plays)}

    def pool_weights(pool):
        if w_by_id is None:
            return None
        return np.asarray([w_by_id[id(p)] for p in pool], dtype=float)

    pools = filter_training_pools(plays)
    if not pools.fg_pool or not pools.punt_pool or not pools.conversion_pool:
        raise EngineError(f"insufficient training pools: {pools.summary()['empty_pools']}")

    # --- quality pipeline ---
    q = _fit_specialist_quality(pools, pool_weights)
    kq_std = Standardizer.fit(q["kq_raw"])
    pq_std = Standardizer.fit(q["pq_raw"])

    tq_off_raw, _ = quality_mod.team_quality_raw(
        [p.total_points_line for p in plays], [p.posteam_spread for p in plays]
    )
    tq_std = Standardizer.fit(tq_off_raw)
    quality = QualityModel(
        fg_baseline=q["fg_baseline"], punt_baseline=q["punt_baseline"],
        kq_standardizer=kq_std, pq_standardizer=pq_std, tq_standardizer=tq_std,
    )

    # --- transition models ---
    conv_pool = pools.conversion_pool
    conv_off_raw, _ = quality_mod.team_quality_raw(
        [p.total_points_line for p in conv_pool], [p.posteam_spread for p in conv_pool]
    )
    bundle = trans_mod.fit_transition_bundle(
        punt={
            "yardline": q["punt_yard"],
            "pq": pq_std.apply(q["pq_raw"]),
            "next_yardline": q["punt_next"],
            "weights": q["punt_w"],
        },
        fg={
            "yardline": q["fg_yard"],
            "kq": kq_std.apply(q["kq_raw"]),
            "made": q["fg_made"],
            "weights": q["fg_w"],
        },
        conversion={
            "down": np.asarray([p.down for p in conv_pool], dtype=float),
            "ydstogo": np.asarray([p.ydstogo for p in conv_pool], dtype=float),
            "yardline": np.asarray([p.yardline for p in conv_pool], dtype=float),
            "delta_tq": tq_std.apply(conv_off_raw),
            "yards_gained": np.asarray([p.yards_gained for p in conv_pool], dtype=float),
            "weights": pool_weights(conv_pool),
        },
        synthetic_misses={
            "count": config.synthetic_miss_count,
            "seed": config.synthetic_miss_seed,
        },
    )

    # --- first-down WP model ---
    wp = fit_wp_model(
        plays,
        tune_plays=tune_plays,
        grid=wp_grid if config.use_grid else None,
        params=config.wp_params,
        weights=weights,
    )
    return DecisionModel(wp_model=wp, transitions=bundle, quality=quality,
                         config=config.engine_config())
