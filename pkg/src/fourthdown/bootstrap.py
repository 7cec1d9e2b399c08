"""Randomized cluster bootstrap and decision-uncertainty machinery.

Resampling draws games uniformly with replacement, then drives within
each drawn game, expressed as per-play fractional weights so fits never
duplicate rows. The fraction parameter blends bootstrap multiplicities
with unit weights at both cluster levels: f=1 is the plain cluster
bootstrap, f->0 recovers the original data.

Uncertainty in the estimated optimal decision is quantified by the share
of replicate models agreeing with the point decision (boot%), a quantile
confidence interval on the effect size of the point decision, and a
three-way confidence bin.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import (
    DecisionModel,
    FitConfig,
    FourthDownState,
    evaluate_batch,
    fit_decision_model,
)
from .ingest import PlayRecord

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

BIN_CONFIDENT = "confident"
BIN_LEAN = "lean"
BIN_UNCERTAIN = "uncertain"

CONFIDENT_MIN = 83.0
LEAN_MIN = 67.0

EFFECT_BINS = [(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, float("inf"))]

MAX_REPLICATE_RETRIES = 3


class BootstrapError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResamplePlan:
    seed: int
    B: int = 101
    scheme: str = "cluster_randomized"
    fraction: float = 1.0

    def __post_init__(self):
        if self.B < 1 or self.B % 2 == 0:
            raise BootstrapError("B must be a positive odd integer")
        if not 0.0 < self.fraction <= 1.0:
            raise BootstrapError("fraction must lie in (0, 1]")
        if self.scheme != "cluster_randomized":
            raise BootstrapError(f"unknown resampling scheme {self.scheme!r}")


def bin_of(boot_pct: float) -> str:
    """Total, exhaustive mapping of boot% to a confidence bin."""
    if boot_pct >= CONFIDENT_MIN:
        return BIN_CONFIDENT
    if boot_pct >= LEAN_MIN:
        return BIN_LEAN
    return BIN_UNCERTAIN


def ci_indices(b: int, level: float = 0.9) -> tuple[int, int]:
    """1-indexed order statistics for the quantile interval.

    Nearest-rank convention: k = ceil((1-level)/2 * B), upper = B+1-k.
    For B=101 at the 90% level this is exactly (6, 96).
    """
    if not 0.0 < level < 1.0:
        raise BootstrapError("level must be in (0, 1)")
    k = max(1, math.ceil((1.0 - level) / 2.0 * b))
    return k, b + 1 - k


@dataclass
class _ClusterIndex:
    game_ids: list
    game_rows: list[np.ndarray]
    game_drives: list[list[np.ndarray]]


def _index_clusters(plays) -> _ClusterIndex:
    by_game: dict = {}
    for i, p in enumerate(plays):
        by_game.setdefault(p.game_id, {}).setdefault(p.drive_id, []).append(i)
    game_ids = sorted(by_game)
    game_rows = []
    game_drives = []
    for gid in game_ids:
        drives = [np.asarray(by_game[gid][did], dtype=np.int64) for did in sorted(by_game[gid])]
        game_drives.append(drives)
        game_rows.append(np.concatenate(drives))
    return _ClusterIndex(game_ids=game_ids, game_rows=game_rows, game_drives=game_drives)


def resample_weights(
    index: _ClusterIndex, plan: ResamplePlan, replicate_index: int, attempt: int = 0
) -> np.ndarray:
    """Per-play weights for one replicate; deterministic for
    (seed, replicate_index, attempt)."""
    rng = np.random.default_rng((plan.seed, replicate_index, attempt))
    n_games = len(index.game_ids)
    n_plays = sum(rows.size for rows in index.game_rows)
    f = plan.fraction

    game_mult = np.bincount(rng.integers(0, n_games, size=n_games), minlength=n_games)
    w = np.empty(n_plays)
    for g in range(n_games):
        m_g = int(game_mult[g])
        game_factor = f * m_g + (1.0 - f)
        drives = index.game_drives[g]
        if m_g == 0:
            for rows in drives:
                w[rows] = game_factor
            continue
        k = len(drives)
        total_mult = np.zeros(k)
        for _copy in range(m_g):
            total_mult += np.bincount(rng.integers(0, k, size=k), minlength=k)
        avg_mult = total_mult / m_g
        for d, rows in enumerate(drives):
            w[rows] = game_factor * (f * avg_mult[d] + (1.0 - f))
    return w


def resample(plays, plan: ResamplePlan, replicate_index: int) -> np.ndarray:
    """Public entry point: weights aligned with plays."""
    return resample_weights(_index_clusters(plays), plan, replicate_index)


def fingerprint_plays(plays) -> str:
    h = hashlib.sha256()
    for p in plays:
        h.update(repr(p).encode("utf-8"))
    return h.hexdigest()


@dataclass
class BootstrapEnsemble:
    point_model: DecisionModel
    replicates: list[DecisionModel]
    plan: ResamplePlan
    data_fingerprint: str = ""

    @property
    def B(self) -> int:
        return len(self.replicates)

    def save(self, directory) -> None:
        from pathlib import Path

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.point_model.save(d / "point.model")
        for i, rep in enumerate(self.replicates):
            rep.save(d / f"rep_{i:03d}.model")
        manifest = {
            "format_version": FORMAT_VERSION,
            "seed": self.plan.seed,
            "B": self.plan.B,
            "fraction": self.plan.fraction,
            "scheme": self.plan.scheme,
            "data_fingerprint": self.data_fingerprint,
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2))

    @classmethod
    def load(cls, directory) -> "BootstrapEnsemble":
        from pathlib import Path

        d = Path(directory)
        manifest = json.loads((d / "manifest.json").read_text())
        if manifest.get("format_version") != FORMAT_VERSION:
            raise BootstrapError("unsupported ensemble format version")
        plan = ResamplePlan(
            seed=manifest["seed"], B=manifest["B"], fraction=manifest["fraction"],
            scheme=manifest["scheme"],
        )
        point = DecisionModel.load(d / "point.model")
        reps = [DecisionModel.load(d / f"rep_{i:03d}.model") for i in range(plan.B)]
        return cls(point_model=point, replicates=reps, plan=plan,
                   data_fingerprint=manifest["data_fingerprint"])


_WORKER: dict = {}


def _init_worker(plays, fit_config, plan):
    _WORKER["plays"] = plays
    _WORKER["index"] = _index_clusters(plays)
    _WORKER["fit_config"] = fit_config
    _WORKER["plan"] = plan
    # Collinear drops are by design in the conversion models; the point fit
    # already surfaced them once.
    warnings.filterwarnings("ignore", message=r"dropping \d+ collinear")


def _fit_replicate(rep_index: int) -> tuple[int, dict]:
    plays = _WORKER["plays"]
    index = _WORKER["index"]
    fit_config = _WORKER["fit_config"]
    plan = _WORKER["plan"]
    last_err = None
    for attempt in range(MAX_REPLICATE_RETRIES + 1):
        w = resample_weights(index, plan, rep_index, attempt)
        try:
            model = fit_decision_model(plays, config=fit_config, weights=w)
            return rep_index, model.to_dict()
        except Exception as exc:  # retried with a fresh sub-seed
            last_err = exc
            logger.warning("replicate %d attempt %d failed: %s", rep_index, attempt, exc)
    raise BootstrapError(
        f"replicate {rep_index} failed after {MAX_REPLICATE_RETRIES} retries: {last_err}"
    )


def fit_ensemble(
    plays,
    plan: ResamplePlan,
    fit_config: FitConfig | None = None,
    n_jobs: int = 1,
    point_model: DecisionModel | None = None,
) -> BootstrapEnsemble:
    """Fit the point model plus B replicate models on cluster resamples.

    Replicates share the point model's hyperparameters; a failed replicate
    fit is retried with a fresh sub-seed up to three times.
    """
    fit_config = fit_config or FitConfig()
    t0 = time.time()
    if point_model is None:
        point_model = fit_decision_model(plays, config=fit_config)
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=r"dropping \d+ collinear")
        replicates: list[DecisionModel | None] = [None] * plan.B
        if n_jobs > 1:
            with ProcessPoolExecutor(
                max_workers=n_jobs, initializer=_init_worker,
                initargs=(plays, fit_config, plan),
            ) as pool:
                for rep_index, model_dict in pool.map(_fit_replicate, range(plan.B)):
                    replicates[rep_index] = DecisionModel.from_dict(model_dict)
                    logger.info("replicate %d/%d done", rep_index + 1, plan.B)
        else:
            _init_worker(plays, fit_config, plan)
            for b in range(plan.B):
                _, model_dict = _fit_replicate(b)
                replicates[b] = DecisionModel.from_dict(model_dict)
                if (b + 1) % 10 == 0 or b + 1 == plan.B:
                    logger.info("replicate %d/%d done", b + 1, plan.B)
    logger.info("ensemble fit (B=%d) in %.1fs", plan.B, time.time() - t0)
    return BootstrapEnsemble(
        point_model=point_model,
        replicates=replicates,  # type: ignore[arg-type]
        plan=plan,
        data_fingerprint=fingerprint_plays(plays),
    )


@dataclass
class UncertaintyReport:
    decision: str
    boot_pct: float
    point_effect_size: float | None
    ci_lo: float
    ci_hi: float
    bin: str
    gains: list[float]
    level: float = 0.9

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "boot_pct": self.boot_pct,
            "point_effect_size": self.point_effect_size,
            "ci": [self.ci_lo, self.ci_hi],
            "bin": self.bin,
            "level": self.level,
            "gains": self.gains,
        }


def _replicate_gain(dv, decision: str) -> float:
    """Signed effect size of a fixed decision under one replicate: its WP
    minus the best available alternative's WP."""
    own = dv.wp_of(decision)
    if own is None:
        # The point decision is unavailable under identical availability
        # rules only if configs differ; treat as maximally unfavorable.
        return float("-inf")
    alts = [dv.wp_of(d) for d in dv.available() if d != decision]
    if not alts:
        return 0.0
    return float(own - max(alts))


def uncertainty_batch(
    states: list[FourthDownState],
    ensemble: BootstrapEnsemble,
    level: float = 0.9,
) -> list[UncertaintyReport]:
    """boot%, quantile CI, and bin for many states at once."""
    if not states:
        return []
    point_vals = evaluate_batch(states, ensemble.point_model)
    n = len(states)
    b = ensemble.B
    agree = np.zeros(n)
    gains = np.empty((b, n))
    for bi, rep in enumerate(ensemble.replicates):
        rep_vals = evaluate_batch(states, rep)
        for si, (pv, rv) in enumerate(zip(point_vals, rep_vals)):
            agree[si] += 1.0 if rv.best == pv.best else 0.0
            gains[bi, si] = _replicate_gain(rv, pv.best)
    lo_k, hi_k = ci_indices(b, level)
    out = []
    for si, pv in enumerate(point_vals):
        g_sorted = np.sort(gains[:, si])
        boot = 100.0 * agree[si] / b
        out.append(UncertaintyReport(
            decision=pv.best,
            boot_pct=float(boot),
            point_effect_size=pv.effect_size,
            ci_lo=float(g_sorted[lo_k - 1]),
            ci_hi=float(g_sorted[hi_k - 1]),
            bin=bin_of(boot),
            gains=[float(g) for g in gains[:, si]],
            level=level,
        ))
    return out


def boot_pct(state: FourthDownState, ensemble: BootstrapEnsemble, level: float = 0.9) -> UncertaintyReport:
    return uncertainty_batch([state], ensemble, level=level)[0]


def play_to_state(play: PlayRecord) -> FourthDownState:
    """Decision context from a historical play. Specialist qualities
    default to league average; the team-quality edge resolves from the
    market columns through the fitted standardizer."""
    return FourthDownState(
        yardline=play.yardline,
        ydstogo=play.ydstogo,
        game_seconds_remaining=play.game_seconds_remaining,
        score_differential=play.score_differential,
        posteam_spread=play.posteam_spread,
        total_points_line=play.total_points_line,
        posteam_timeouts=play.posteam_timeouts,
        defteam_timeouts=play.defteam_timeouts,
        receive_2h_ko=play.receive_2h_ko,
        home=play.home,
        total_score=play.total_score,
    )


def overconfidence_summary(
    fourth_down_plays,
    ensemble: BootstrapEnsemble,
    level: float = 0.9,
) -> dict:
    """Distribution of effect size and of confidence given effect size."""
    states = [play_to_state(p) for p in fourth_down_plays]
    reports = uncertainty_batch(states, ensemble, level=level)
    rows = []
    for lo, hi in EFFECT_BINS:
        members = [
            r for r in reports
            if r.point_effect_size is not None and lo <= 100.0 * r.point_effect_size < hi
        ]
        n = len(members)
        shares = {b: 0.0 for b in (BIN_CONFIDENT, BIN_LEAN, BIN_UNCERTAIN)}
        for r in members:
            shares[r.bin] += 1.0
        if n:
            shares = {k: v / n for k, v in shares.items()}
        rows.append({
            "effect_lo_pct": lo,
            "effect_hi_pct": hi,
            "count": n,
            "share": n / len(reports) if reports else 0.0,
            "confident": shares[BIN_CONFIDENT],
            "lean": shares[BIN_LEAN],
            "uncertain": shares[BIN_UNCERTAIN],
        })
    total = len(reports)
    global_shares = {b: 0.0 for b in (BIN_CONFIDENT, BIN_LEAN, BIN_UNCERTAIN)}
    for r in reports:
        global_shares[r.bin] += 1.0
    if total:
        global_shares = {k: v / total for k, v in global_shares.items()}
    return {"bins": rows, "global": global_shares, "n_plays": total, "level": level}


def stability_analysis(
    plays,
    candidate_Bs: list[int],
    M: int,
    probe_states: list[FourthDownState],
    fit_config: FitConfig | None = None,
    base_seed: int = 0,
    n_jobs: int = 1,
) -> dict:
    """Choice-of-B stability: across M independent ensembles per B, how
    often each probe lands in its modal confidence bin.

    Runs at a declared reduced configuration; the output records it.
    """
    if M < 2:
        raise BootstrapError("M must be at least 2")
    fit_config = fit_config or FitConfig()
    point_model = fit_decision_model(plays, config=fit_config)
    results = {}
    for b in candidate_Bs:
        cats = np.empty((M, len(probe_states)), dtype=object)
        for m in range(M):
            digest = hashlib.sha256(f"{base_seed}:{b}:{m}".encode()).digest()
            plan = ResamplePlan(seed=int.from_bytes(digest[:4], "little"), B=b)
            ens = fit_ensemble(plays, plan, fit_config=fit_config, n_jobs=n_jobs,
                               point_model=point_model)
            reports = uncertainty_batch(probe_states, ens)
            cats[m, :] = [r.bin for r in reports]
            logger.info("stability B=%d draw %d/%d done", b, m + 1, M)
        p_i = []
        for si in range(len(probe_states)):
            col = cats[:, si]
            freqs = [np.mean(col == c) for c in (BIN_CONFIDENT, BIN_LEAN, BIN_UNCERTAIN)]
            p_i.append(float(max(freqs)))
        results[b] = {"p_bar": float(np.mean(p_i)), "p_i": p_i}
    return {
        "results": results,
        "M": M,
        "n_probes": len(probe_states),
        "config": {
            "wp_params": (fit_config.wp_params.to_dict()),
            "n_plays": len(plays),
        },
    }


def stability_histogram(p_i: list[float], n_bins: int = 20) -> list[dict]:
    """Histogram rows for the p_i distribution export."""
    counts, edges = np.histogram(np.asarray(p_i, dtype=float), bins=n_bins, range=(0.0, 1.0))
    return [
        {"lo": float(edges[i]), "hi": float(edges[i + 1]), "count": int(counts[i])}
        for i in range(n_bins)
    ]
