"""Synthetic game world with exactly computable win probability.

A small Markov game over (yardline bucket, down, clamped score
differential, plays remaining), always framed relative to the team in
possession. Down/distance detail is summarized by per-bucket conversion
parameters; fourth downs resolve through a configurable synthetic coach
policy. True win probability comes from backward induction over the
finite state space, which makes the world a ground-truth oracle for
calibration, coverage, and recovery tests.

Simulated histories are emitted in the same record schema the ingestion
layer consumes; granular yardlines are drawn uniformly over each bucket's
integer support so fitted models see full within-bucket variation while
the truth stays a function of the bucket.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

from .ingest import PlayRecord, era_for_season

logger = logging.getLogger(__name__)

N_BUCKETS = 10
KICKOFF_YARDLINE = 75
PUNT_TOUCHBACK = 80

_COACHES = [f"coach_{i:02d}" for i in range(8)]
_KICKERS = [f"kicker_{i}" for i in range(4)]
_PUNTERS = [f"punter_{i}" for i in range(4)]


class WorldError(ValueError):
    pass


def bucket_of(yardline: int) -> int:
    if not 1 <= yardline <= 99:
        raise WorldError(f"yardline {yardline} outside [1, 99]")
    return (int(yardline) - 1) // 10


def bucket_support(b: int) -> np.ndarray:
    """Integer yardlines covered by a bucket (bucket 9 stops at 99)."""
    lo = 10 * b + 1
    hi = min(10 * b + 10, 99)
    return np.arange(lo, hi + 1)


@dataclass(frozen=True)
class SyntheticWorld:
    """World parameters. All probability vectors are indexed by bucket."""

    plays_per_game: int = 60
    max_diff: int = 28
    conversion_prob: tuple[float, ...] = (0.30,) * N_BUCKETS
    turnover_prob: tuple[float, ...] = (0.03,) * N_BUCKETS
    fg_make_prob: tuple[float, ...] = (0.97, 0.92, 0.80, 0.55, 0.25, 0, 0, 0, 0, 0)
    policy_go: tuple[float, ...] = (0.25, 0.20, 0.15, 0.15, 0.12, 0.12, 0.10, 0.10, 0.10, 0.10)
    policy_fg: tuple[float, ...] = (0.75, 0.80, 0.85, 0.60, 0.38, 0, 0, 0, 0, 0)
    policy_punt: tuple[float, ...] = (0.0, 0.0, 0.0, 0.25, 0.50, 0.88, 0.90, 0.90, 0.90, 0.90)
    punt_net: int = 40
    seconds_per_play: int = 60

    def __post_init__(self):
        if self.plays_per_game < 1 or self.plays_per_game > 120:
            raise WorldError("plays_per_game must be in [1, 120]")
        if self.plays_per_game * self.seconds_per_play > 3600:
            raise WorldError("game longer than 3600 seconds")
        for name in ("conversion_prob", "turnover_prob", "fg_make_prob",
                     "policy_go", "policy_fg", "policy_punt"):
            v = getattr(self, name)
            if len(v) != N_BUCKETS or any(p < 0 or p > 1 for p in v):
                raise WorldError(f"{name} must be {N_BUCKETS} probabilities")
        for b in range(N_BUCKETS):
            if self.conversion_prob[b] + self.turnover_prob[b] > 1:
                raise WorldError(f"bucket {b}: conversion + turnover exceeds 1")
            pol = self.policy_go[b] + self.policy_fg[b] + self.policy_punt[b]
            if abs(pol - 1.0) > 1e-9:
                raise WorldError(f"bucket {b}: fourth-down policy does not sum to 1 ({pol})")
            if self.policy_fg[b] > 0 and b > 4:
                raise WorldError(f"bucket {b}: field goals not modeled beyond bucket 4")

    @property
    def n_states(self) -> int:
        return (self.plays_per_game + 1) * N_BUCKETS * 4 * (2 * self.max_diff + 1)

    def seconds_at(self, plays_remaining: int) -> int:
        return self.seconds_per_play * plays_remaining

    def clamp_score(self, s: int) -> int:
        return int(np.clip(s, -self.max_diff, self.max_diff))

    def punt_destination(self, yardline: int) -> int:
        """Opponent yardline after a punt from a granular yardline."""
        return min(PUNT_TOUCHBACK, 100 - int(yardline) + self.punt_net)

    @staticmethod
    def fg_miss_destination(yardline: int) -> int:
        """Opponent yardline after a missed field goal (7-yard kick spot)."""
        return min(80, 100 - (int(yardline) + 7))

    @staticmethod
    def mirror_destination(yardline: int) -> int:
        """Opponent yardline after a turnover at the spot."""
        return 100 - int(yardline)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, s: str) -> "SyntheticWorld":
        d = json.loads(s)
        for k, v in list(d.items()):
            if isinstance(v, list):
                d[k] = tuple(v)
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "SyntheticWorld":
        with open(path) as f:
            return cls.from_json(f.read())


def _bucket_distribution(world: SyntheticWorld, b: int, dest_fn) -> list[tuple[int, float]]:
    """Exact destination-bucket law induced by a granular rule under the
    integer-uniform within-bucket spot distribution."""
    support = bucket_support(b)
    dests = [bucket_of(dest_fn(int(y))) for y in support]
    out: dict[int, float] = {}
    for d in dests:
        out[d] = out.get(d, 0.0) + 1.0 / len(dests)
    return sorted(out.items())


class ValueTable:
    """Backward-induction win probability for a SyntheticWorld.

    V[r, b, d-1, s+max_diff] is the probability that the team currently in
    possession wins, with r plays remaining.
    """

    def __init__(self, world: SyntheticWorld):
        self.world = world
        self.v = self._solve(world)

    def _solve(self, w: SyntheticWorld) -> np.ndarray:
        m = w.max_diff
        n_s = 2 * m + 1
        r_max = w.plays_per_game
        scores = np.arange(-m, m + 1)
        v = np.empty((r_max + 1, N_BUCKETS, 4, n_s))
        v[0] = np.where(scores > 0, 1.0, np.where(scores < 0, 0.0, 0.5))

        turnover_dist = [_bucket_distribution(w, b, w.mirror_destination) for b in range(N_BUCKETS)]
        punt_dist = [_bucket_distribution(w, b, w.punt_destination) for b in range(N_BUCKETS)]
        miss_dist = [
            _bucket_distribution(w, b, w.fg_miss_destination) if w.fg_make_prob[b] > 0 else None
            for b in range(N_BUCKETS)
        ]
        kick_bucket = bucket_of(KICKOFF_YARDLINE)

        def flipped(prev, b_next, s_vec, pts):
            """Value to us of handing the opponent a first down at b_next
            after scoring pts; s_vec holds our current (vector) score."""
            s_after = np.clip(s_vec + pts, -m, m)
            idx = (-s_after + m).astype(int)
            return 1.0 - prev[b_next, 0, idx]

        for r in range(1, r_max + 1):
            prev = v[r - 1]
            for b in range(N_BUCKETS):
                c = w.conversion_prob[b]
                t = w.turnover_prob[b]
                if b == 0:
                    succ = flipped(prev, kick_bucket, scores, 7)
                else:
                    succ = prev[b - 1, 0, :]
                away = sum(p * flipped(prev, bb, scores, 0) for bb, p in turnover_dist[b])
                v_go = c * succ + (1.0 - c) * away

                for d in range(1, 4):
                    stay = prev[b, d, :]  # next down, same spot
                    v[r, b, d - 1, :] = c * succ + t * away + (1.0 - c - t) * stay

                v_punt = sum(p * flipped(prev, bb, scores, 0) for bb, p in punt_dist[b])
                if w.fg_make_prob[b] > 0:
                    k = w.fg_make_prob[b]
                    make = flipped(prev, kick_bucket, scores, 3)
                    miss = sum(p * flipped(prev, bb, scores, 0) for bb, p in miss_dist[b])
                    v_fg = k * make + (1.0 - k) * miss
                else:
                    v_fg = np.zeros_like(scores, dtype=float)
                v[r, b, 3, :] = (
                    w.policy_go[b] * v_go
                    + w.policy_fg[b] * v_fg
                    + w.policy_punt[b] * v_punt
                )
            np.clip(v[r], 0.0, 1.0, out=v[r])  # remove float drift in mixtures
        return v

    def true_wp(self, yardline: int, down: int, score_diff: int, plays_remaining: int) -> float:
        """Exact win probability for the possession team."""
        w = self.world
        if not 0 <= plays_remaining <= w.plays_per_game:
            raise WorldError(f"plays_remaining {plays_remaining} out of range")
        s = w.clamp_score(score_diff)
        return float(self.v[plays_remaining, bucket_of(yardline), down - 1, s + w.max_diff])

    def true_decision_values(
        self, yardline: int, score_diff: int, plays_remaining: int
    ) -> dict[str, float | None]:
        """Exact value of each fourth-down decision at a granular spot.

        Field goals are defined only where the world models them
        (buckets 0-4); elsewhere the value is None.
        """
        w = self.world
        if plays_remaining < 1:
            raise WorldError("no plays remaining")
        r = plays_remaining - 1
        m = w.max_diff
        b = bucket_of(yardline)
        s = w.clamp_score(score_diff)

        def cont(y_next: int, s_now: int) -> float:
            # we keep possession, first down at y_next
            return float(self.v[r, bucket_of(y_next), 0, s_now + m])

        def flip(y_next: int, pts: int) -> float:
            s_after = w.clamp_score(s + pts)
            return 1.0 - float(self.v[r, bucket_of(y_next), 0, -s_after + m])

        c = w.conversion_prob[b]
        if b == 0:
            succ = flip(KICKOFF_YARDLINE, 7)
        else:
            succ = cont(yardline - 10, s)
        fail = flip(w.mirror_destination(yardline), 0)
        v_go = c * succ + (1.0 - c) * fail

        v_punt = flip(w.punt_destination(yardline), 0)

        v_fg = None
        if w.fg_make_prob[b] > 0:
            k = w.fg_make_prob[b]
            v_fg = k * flip(KICKOFF_YARDLINE, 3) + (1.0 - k) * flip(w.fg_miss_destination(yardline), 0)

        return {"go": v_go, "field_goal": v_fg, "punt": v_punt}


def simulate_history(world: SyntheticWorld, n_games: int, seed: int) -> list[PlayRecord]:
    """Simulate games and emit plays in the artifact's native schema.

    Deterministic per (world, n_games, seed); each game uses an
    independent substream so histories are order-independent.
    """
    if n_games < 1:
        raise WorldError("n_games must be at least 1")
    plays: list[PlayRecord] = []
    for g in range(n_games):
        plays.extend(_simulate_game(world, seed, g))
    logger.info("simulated %d games -> %d plays", n_games, len(plays))
    return plays


def _simulate_game(world: SyntheticWorld, seed: int, game_index: int) -> list[PlayRecord]:
    w = world
    rng = np.random.default_rng((seed, game_index))
    game_id = f"g{game_index:05d}"
    season = 2018 + game_index % 5
    total_line = float(rng.choice([38.0, 40.0, 42.0, 44.0]))
    coaches = list(rng.choice(_COACHES, size=2, replace=False))
    kickers = list(rng.choice(_KICKERS, size=2, replace=True))
    punters = list(rng.choice(_PUNTERS, size=2, replace=True))

    possession = int(rng.integers(0, 2))  # team 0 is home
    # Score differential is a clamped state variable, updated with the same
    # clipping the value table uses, so simulation and truth never diverge.
    diff0 = 0  # team-0-relative clamped differential
    total_points = 0
    drive = 1
    yardline = KICKOFF_YARDLINE
    down = 1
    # Distance to go is an emission-level label: partial gains shorten it
    # without moving the bucket, so the value table is unaffected.
    ydstogo = min(10, yardline)

    def score(team: int, pts: int):
        nonlocal diff0, total_points
        diff0 = w.clamp_score(diff0 + pts if team == 0 else diff0 - pts)
        total_points += pts

    raw: list[dict] = []
    r = w.plays_per_game
    while r >= 1:
        s = diff0 if possession == 0 else -diff0
        b = bucket_of(yardline)
        z = ydstogo
        rec = {
            "game_id": game_id,
            "drive_id": f"{game_id}_dr{drive:03d}",
            "play_index": w.plays_per_game - r + 1,
            "posteam": possession,
            "game_seconds_remaining": w.seconds_at(r),
            "score_differential": s,
            "total_score": total_points,
            "posteam_spread": 0.0,
            "total_points_line": total_line,
            "yardline": yardline,
            "ydstogo": z,
            "down": down,
            "posteam_timeouts": 3,
            "defteam_timeouts": 3,
            "receive_2h_ko": 0,
            "home": 1 if possession == 0 else 0,
            "season": season,
            "roof": "outdoors",
            "posteam_coach": coaches[possession],
            "kicker_id": None,
            "punter_id": None,
            "play_type": "other",
            "yards_gained": None,
            "fg_made": None,
            "next_yardline_after_punt": None,
        }

        c = w.conversion_prob[b]
        t = w.turnover_prob[b]
        u = rng.random()
        if down < 4:
            rec["play_type"] = "go" if down == 3 else "other"
            if u < c:  # series converted
                rec["yards_gained"] = yardline if b == 0 else 10
                if b == 0:  # touchdown (+7 with the extra point)
                    score(possession, 7)
                    possession, yardline, down, drive = 1 - possession, KICKOFF_YARDLINE, 1, drive + 1
                else:
                    yardline, down = yardline - 10, 1
                ydstogo = min(10, yardline)
            elif u < c + t:  # giveaway
                rec["yards_gained"] = 0
                possession = 1 - possession
                yardline, down, drive = w.mirror_destination(yardline), 1, drive + 1
                ydstogo = min(10, yardline)
            else:
                # Partial gains shorten the distance label but never the
                # spot: bucket-equivalent to no gain for the value table.
                gain = min(int(rng.choice([0, 2, 6], p=[0.5, 0.25, 0.25])), z - 1)
                rec["yards_gained"] = gain
                ydstogo = z - gain
                down += 1
        else:
            dec = rng.random()
            if dec < w.policy_go[b]:
                rec["play_type"] = "go"
                if rng.random() < c:
                    rec["yards_gained"] = yardline if b == 0 else 10
                    if b == 0:
                        score(possession, 7)
                        possession, yardline, down, drive = 1 - possession, KICKOFF_YARDLINE, 1, drive + 1
                    else:
                        yardline, down = yardline - 10, 1
                else:
                    rec["yards_gained"] = 0
                    possession = 1 - possession
                    yardline, down, drive = w.mirror_destination(yardline), 1, drive + 1
            elif dec < w.policy_go[b] + w.policy_fg[b]:
                rec["play_type"] = "field_goal"
                rec["kicker_id"] = kickers[possession]
                if rng.random() < w.fg_make_prob[b]:
                    rec["fg_made"] = 1
                    score(possession, 3)
                    next_spot = KICKOFF_YARDLINE
                else:
                    rec["fg_made"] = 0
                    next_spot = w.fg_miss_destination(yardline)
                possession, yardline, down, drive = 1 - possession, next_spot, 1, drive + 1
            else:
                rec["play_type"] = "punt"
                rec["punter_id"] = punters[possession]
                next_spot = w.punt_destination(yardline)
                rec["next_yardline_after_punt"] = next_spot
                possession, yardline, down, drive = 1 - possession, next_spot, 1, drive + 1
            ydstogo = min(10, yardline)

        raw.append(rec)
        r -= 1

    if diff0 == 0:
        winner = int(rng.integers(0, 2))  # overtime coin flip
    else:
        winner = 0 if diff0 > 0 else 1

    out = []
    for rec in raw:
        posteam = rec.pop("posteam")
        rec["win_loss"] = 1 if posteam == winner else 0
        rec["era"] = era_for_season(rec["season"])
        out.append(PlayRecord(**rec))
    return out
