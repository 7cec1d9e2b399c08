"""Play-by-play CSV ingestion, validation, splits, and training pools.

The parser takes a column map (canonical field -> CSV header) so renamed
exports keep working. Rows that violate record invariants are diverted to
a reject log with a row number and reason; only schema-level problems
(missing required columns) are fatal.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, fields as dc_fields
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

PLAY_TYPES = {"go", "field_goal", "punt", "kickoff", "other"}
ROOFS = {"closed", "dome", "open", "outdoors"}
DECISIONS = ("go", "field_goal", "punt")

REQUIRED_FIELDS = [
    "game_id", "drive_id", "play_index", "win_loss", "game_seconds_remaining",
    "score_differential", "total_score", "posteam_spread", "total_points_line",
    "yardline", "ydstogo", "down", "posteam_timeouts", "defteam_timeouts",
    "receive_2h_ko", "home", "posteam_coach", "play_type",
]
OPTIONAL_FIELDS = [
    "era", "season", "roof", "kicker_id", "punter_id",
    "yards_gained", "fg_made", "next_yardline_after_punt",
]

ERA_BOUNDS = [(2005, "1999-2005"), (2013, "2006-2013"), (2017, "2014-2017")]
ERA_LATEST = "2018-2022"


class SchemaError(ValueError):
    """A required column cannot be resolved; the file cannot be ingested."""


class SplitError(ValueError):
    pass


def era_for_season(season: int) -> str:
    for bound, label in ERA_BOUNDS:
        if season <= bound:
            return label
    return ERA_LATEST


@dataclass(frozen=True)
class PlayRecord:
    game_id: str
    drive_id: str
    play_index: int
    win_loss: int
    game_seconds_remaining: int
    score_differential: int
    total_score: int
    posteam_spread: float
    total_points_line: float
    yardline: int
    ydstogo: int
    down: int
    posteam_timeouts: int
    defteam_timeouts: int
    receive_2h_ko: int
    home: int
    era: str
    roof: str = "outdoors"
    posteam_coach: str = ""
    season: int | None = None
    kicker_id: str | None = None
    punter_id: str | None = None
    play_type: str = "other"
    yards_gained: int | None = None
    fg_made: int | None = None
    next_yardline_after_punt: int | None = None

    @property
    def score_time_ratio(self) -> float:
        # Derived, never stored: single source of truth for the ratio.
        return self.score_differential / (0.01 + self.game_seconds_remaining)

    @property
    def is_terminal_marker(self) -> bool:
        return self.yardline in (0, 100)


@dataclass
class ParseResult:
    plays: list[PlayRecord]
    rejects: list[tuple[int, str]]
    n_rows: int

    def write_reject_log(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for row_number, reason in self.rejects:
                f.write(f"{row_number}\t{reason}\n")


def _parse_int(raw: str, name: str) -> int:
    v = float(raw)
    if v != int(v):
        raise ValueError(f"{name} must be integral, got {raw!r}")
    return int(v)


def _validate(rec: dict) -> str | None:
    """Return a reject reason, or None if the record is valid."""
    if not 0 <= rec["yardline"] <= 100:
        return "yardline outside [0,100]"
    if rec["win_loss"] not in (0, 1):
        return "win_loss not binary"
    if not 1 <= rec["game_seconds_remaining"] <= 3600:
        return "game_seconds_remaining outside [1,3600]"
    if rec["total_score"] < 0:
        return "negative total_score"
    if rec["down"] not in (1, 2, 3, 4):
        return "down outside {1..4}"
    if rec["ydstogo"] < 1:
        return "ydstogo must be positive"
    if rec["yardline"] >= 1 and rec["yardline"] != 100 and rec["ydstogo"] > rec["yardline"]:
        return "ydstogo exceeds yardline"
    if rec["posteam_timeouts"] not in (0, 1, 2, 3):
        return "posteam_timeouts outside {0..3}"
    if rec["defteam_timeouts"] not in (0, 1, 2, 3):
        return "defteam_timeouts outside {0..3}"
    if rec["receive_2h_ko"] not in (0, 1):
        return "receive_2h_ko not binary"
    if rec["home"] not in (0, 1):
        return "home not binary"
    if rec["play_type"] not in PLAY_TYPES:
        return f"unknown play_type {rec['play_type']!r}"
    if rec["roof"] not in ROOFS:
        return f"unknown roof {rec['roof']!r}"
    if rec["season"] is not None:
        derived = era_for_season(rec["season"])
        if rec["era"] and rec["era"] != derived:
            return f"era {rec['era']!r} inconsistent with season {rec['season']}"
    return None


_INT_FIELDS = {
    "play_index", "win_loss", "game_seconds_remaining", "score_differential",
    "total_score", "yardline", "ydstogo", "down", "posteam_timeouts",
    "defteam_timeouts", "receive_2h_ko", "home",
}
_FLOAT_FIELDS = {"posteam_spread", "total_points_line"}
_OPT_INT_FIELDS = {"season", "yards_gained", "fg_made", "next_yardline_after_punt"}


def parse_plays(csv_source, schema: dict[str, str] | None = None) -> ParseResult:
    """Parse and validate a play-by-play CSV.

    csv_source may be a path, text stream, or bytes. schema maps canonical
    field names to CSV headers (defaults to identity).
    """
    close_after = False
    if isinstance(csv_source, (str, Path)):
        stream = open(csv_source, "r", encoding="utf-8", newline="")
        close_after = True
    elif isinstance(csv_source, bytes):
        stream = io.StringIO(csv_source.decode("utf-8"))
    else:
        stream = csv_source
    try:
        return _parse_stream(stream, schema or {})
    finally:
        if close_after:
            stream.close()


def _parse_stream(stream, schema: dict[str, str]) -> ParseResult:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header row")
    col_of = {name: i for i, name in enumerate(header)}

    index: dict[str, int] = {}
    for fname in REQUIRED_FIELDS:
        col = schema.get(fname, fname)
        if col not in col_of:
            raise SchemaError(f"required column {col!r} (field {fname!r}) missing from header")
        index[fname] = col_of[col]
    for fname in OPTIONAL_FIELDS:
        col = schema.get(fname, fname)
        if col in col_of:
            index[fname] = col_of[col]

    plays: list[PlayRecord] = []
    rejects: list[tuple[int, str]] = []
    n_rows = 0
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        n_rows += 1
        try:
            rec = _row_to_dict(row, index)
        except (ValueError, IndexError) as exc:
            rejects.append((row_number, str(exc)))
            continue
        reason = _validate(rec)
        if reason is not None:
            rejects.append((row_number, reason))
            continue
        if not rec["era"]:
            if rec["season"] is not None:
                rec["era"] = era_for_season(rec["season"])
            else:
                rejects.append((row_number, "neither era nor season available"))
                continue
        plays.append(PlayRecord(**rec))

    plays, game_rejects = _check_win_loss_orientation(plays)
    rejects.extend(game_rejects)
    rejects.sort(key=lambda t: t[0])
    logger.info("parsed %d rows: %d accepted, %d rejected", n_rows, len(plays), len(rejects))
    return ParseResult(plays=plays, rejects=rejects, n_rows=n_rows)


def _row_to_dict(row: list[str], index: dict[str, int]) -> dict:
    rec: dict = {}
    for fname, i in index.items():
        raw = row[i].strip() if i < len(row) else ""
        if fname in _INT_FIELDS:
            if raw == "":
                raise ValueError(f"missing value for {fname}")
            rec[fname] = _parse_int(raw, fname)
        elif fname in _FLOAT_FIELDS:
            if raw == "":
                raise ValueError(f"missing value for {fname}")
            rec[fname] = float(raw)
        elif fname in _OPT_INT_FIELDS:
            rec[fname] = _parse_int(raw, fname) if raw != "" else None
        else:
            rec[fname] = raw
    rec.setdefault("era", "")
    rec.setdefault("roof", "outdoors")
    if rec.get("roof", "") == "":
        rec["roof"] = "outdoors"
    for opt in ("kicker_id", "punter_id"):
        if rec.get(opt, "") == "":
            rec[opt] = None
    for opt in _OPT_INT_FIELDS:
        rec.setdefault(opt, None)
    return rec


def _check_win_loss_orientation(plays: list[PlayRecord]):
    """Within a game, win_loss must be constant per possession side and
    complementary across sides. Games violating this are rejected whole."""
    by_game: dict[str, dict[int, set[int]]] = {}
    for p in plays:
        by_game.setdefault(p.game_id, {}).setdefault(p.home, set()).add(p.win_loss)
    bad_games = set()
    for gid, sides in by_game.items():
        if any(len(v) > 1 for v in sides.values()):
            bad_games.add(gid)
        elif len(sides) == 2:
            (a,), (b,) = (sides[k] for k in sorted(sides))
            if a == b:
                bad_games.add(gid)
    if not bad_games:
        return plays, []
    kept = [p for p in plays if p.game_id not in bad_games]
    rejects = [(0, f"game {gid}: inconsistent win_loss orientation") for gid in sorted(bad_games)]
    return kept, rejects


@dataclass(frozen=True)
class DatasetSplit:
    """Game-level partition. Only the test accessor exposes plays, and it
    restricts to first downs; train and tune expose all downs."""

    train_game_ids: frozenset
    tune_game_ids: frozenset
    test_game_ids: frozenset
    seed: int

    def train_plays(self, plays):
        return [p for p in plays if p.game_id in self.train_game_ids]

    def tune_plays(self, plays):
        return [p for p in plays if p.game_id in self.tune_game_ids]

    def test_plays(self, plays):
        return [p for p in plays if p.game_id in self.test_game_ids and p.down == 1]

    def report(self, plays) -> dict:
        return {
            "games": {
                "train": len(self.train_game_ids),
                "tune": len(self.tune_game_ids),
                "test": len(self.test_game_ids),
            },
            "plays": {
                "train": len(self.train_plays(plays)),
                "tune": len(self.tune_plays(plays)),
                "test": len(self.test_plays(plays)),
            },
            "seed": self.seed,
        }


def make_split(plays, fractions: dict[str, float], seed: int) -> DatasetSplit:
    """Deterministic game-level split into train/tune/test."""
    total = sum(fractions.get(k, 0.0) for k in ("train", "tune", "test"))
    if abs(total - 1.0) > 1e-9:
        raise SplitError(f"fractions must sum to 1, got {total}")
    games = sorted({p.game_id for p in plays})
    n = len(games)
    nonempty = [k for k in ("train", "tune", "test") if fractions.get(k, 0.0) > 0]
    if n < len(nonempty):
        raise SplitError(f"{n} game(s) cannot fill {len(nonempty)} nonempty partitions")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    shuffled = [games[i] for i in order]

    counts = {}
    acc = 0
    for i, k in enumerate(nonempty):
        if i == len(nonempty) - 1:
            counts[k] = n - acc
        else:
            counts[k] = max(1, int(round(fractions[k] * n)))
            acc += counts[k]
    if min(counts.values()) < 1 or sum(counts.values()) != n:
        raise SplitError("could not allocate at least one game per nonempty partition")

    sets = {"train": frozenset(), "tune": frozenset(), "test": frozenset()}
    start = 0
    for k in nonempty:
        sets[k] = frozenset(shuffled[start : start + counts[k]])
        start += counts[k]
    return DatasetSplit(
        train_game_ids=sets["train"],
        tune_game_ids=sets["tune"],
        test_game_ids=sets["test"],
        seed=seed,
    )


@dataclass
class TrainingPools:
    punt_pool: list[PlayRecord]
    fg_pool: list[PlayRecord]
    conversion_pool: list[PlayRecord]
    first_down_pool: list[PlayRecord]
    fourth_down_pool: list[PlayRecord]

    def summary(self) -> dict:
        out = {
            "punt_pool": len(self.punt_pool),
            "fg_pool": len(self.fg_pool),
            "conversion_pool": len(self.conversion_pool),
            "first_down_pool": len(self.first_down_pool),
            "fourth_down_pool": len(self.fourth_down_pool),
        }
        out["empty_pools"] = [k for k, v in out.items() if isinstance(v, int) and v == 0]
        return out


def filter_training_pools(plays) -> TrainingPools:
    """Model training pools. Terminal-marker rows (yardline 0 or 100) are
    excluded everywhere: they are outcomes, not decision states."""
    usable = [p for p in plays if not p.is_terminal_marker]
    pools = TrainingPools(
        punt_pool=[
            p for p in usable
            if p.play_type == "punt" and p.yardline > 30 and p.next_yardline_after_punt is not None
        ],
        fg_pool=[p for p in usable if p.play_type == "field_goal" and p.fg_made is not None],
        conversion_pool=[
            p for p in usable
            if p.down in (3, 4) and p.play_type == "go" and p.yards_gained is not None
        ],
        first_down_pool=[p for p in usable if p.down == 1],
        fourth_down_pool=[p for p in usable if p.down == 4 and p.play_type in DECISIONS],
    )
    empty = pools.summary()["empty_pools"]
    if empty:
        logger.warning("empty training pools: %s", empty)
    return pools


def columns(plays, *names) -> dict[str, np.ndarray]:
    """Extract numpy columns from a list of records."""
    out = {}
    for name in names:
        vals = [getattr(p, name) for p in plays]
        if name in {"game_id", "drive_id", "era", "roof", "posteam_coach",
                    "kicker_id", "punter_id", "play_type"}:
            out[name] = np.asarray(["" if v is None else v for v in vals], dtype=object)
        else:
            out[name] = np.asarray([np.nan if v is None else v for v in vals], dtype=float)
    return out


def dump_plays(plays, path) -> None:
    """Line-delimited JSON dump of accepted records."""
    with open(path, "w", encoding="utf-8") as f:
        for p in plays:
            f.write(json.dumps(asdict(p)) + "\n")


def load_plays(path) -> list[PlayRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(PlayRecord(**json.loads(line)))
    return out


def plays_to_csv(plays, path) -> None:
    """Write records back to the canonical CSV schema."""
    field_names = [f.name for f in dc_fields(PlayRecord)]
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(field_names)
        for p in plays:
            row = []
            for name in field_names:
                v = getattr(p, name)
                row.append("" if v is None else v)
            w.writerow(row)
