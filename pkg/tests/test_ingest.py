import io

import numpy as np
import pytest

from fourthdown import ingest
from fourthdown.ingest import PlayRecord

HEADER = (
    "game_id,drive_id,play_index,win_loss,game_seconds_remaining,score_differential,"
    "total_score,posteam_spread,total_points_line,yardline,ydstogo,down,"
    "posteam_timeouts,defteam_timeouts,receive_2h_ko,home,posteam_coach,play_type,"
    "season,yards_gained,fg_made,next_yardline_after_punt,kicker_id,punter_id"
)


def _row(**kw):
    base = dict(
        game_id="g1", drive_id="g1_d1", play_index=1, win_loss=1,
        game_seconds_remaining=1800, score_differential=-3, total_score=23,
        posteam_spread=-2.5, total_points_line=44.0, yardline=36, ydstogo=2,
        down=4, posteam_timeouts=3, defteam_timeouts=2, receive_2h_ko=0, home=1,
        posteam_coach="c", play_type="go", season=2020, yards_gained="",
        fg_made="", next_yardline_after_punt="", kicker_id="", punter_id="",
    )
    base.update(kw)
    cols = HEADER.split(",")
    return ",".join(str(base[c]) for c in cols)


def _csv(*rows):
    return io.StringIO("\n".join([HEADER, *rows]) + "\n")


class TestParse:
    def test_valid_row_accepted(self):
        res = ingest.parse_plays(_csv(_row()))
        assert res.n_rows == 1
        assert len(res.plays) == 1
        assert res.rejects == []
        p = res.plays[0]
        assert p.down == 4 and p.yardline == 36 and p.ydstogo == 2
        assert p.era == "2018-2022"

    def test_opening_play_seconds_3600_valid(self):
        res = ingest.parse_plays(_csv(_row(game_seconds_remaining=3600, down=1)))
        assert len(res.plays) == 1

    def test_ydstogo_exceeds_yardline_rejected(self):
        res = ingest.parse_plays(_csv(_row(ydstogo=15, yardline=10)))
        assert len(res.plays) == 0
        assert len(res.rejects) == 1
        assert "ydstogo exceeds yardline" in res.rejects[0][1]

    def test_reject_accounting(self):
        rows = [_row(), _row(ydstogo=15, yardline=10), _row(down=7), _row(play_index="x")]
        res = ingest.parse_plays(_csv(*rows))
        assert res.n_rows == 4
        assert len(res.plays) + len(res.rejects) == res.n_rows

    def test_missing_required_column_fatal(self):
        bad_header = HEADER.replace("yardline,", "")
        stream = io.StringIO(bad_header + "\n")
        with pytest.raises(ingest.SchemaError, match="yardline"):
            ingest.parse_plays(stream)

    def test_column_map_resolves_renamed_headers(self):
        header = HEADER.replace("yardline", "yards_to_opponent_endzone")
        row = _row().replace("g1_d1", "g1_d1")
        stream = io.StringIO(header + "\n" + row + "\n")
        res = ingest.parse_plays(stream, schema={"yardline": "yards_to_opponent_endzone"})
        assert len(res.plays) == 1

    def test_unparseable_numeric_is_row_reject(self):
        res = ingest.parse_plays(_csv(_row(down="four")))
        assert len(res.rejects) == 1

    def test_era_derived_from_season(self):
        res = ingest.parse_plays(_csv(_row(season=2010)))
        assert res.plays[0].era == "2006-2013"

    def test_win_loss_orientation_enforced(self):
        rows = [
            _row(play_index=1, home=1, win_loss=1),
            _row(play_index=2, home=0, win_loss=1),  # both sides claim a win
        ]
        res = ingest.parse_plays(_csv(*rows))
        assert len(res.plays) == 0
        assert any("orientation" in r[1] for r in res.rejects)

    def test_terminal_markers_accepted(self):
        res = ingest.parse_plays(_csv(_row(yardline=0, play_type="other"),
                                      _row(yardline=100, play_type="other")))
        assert len(res.plays) == 2
        assert all(p.is_terminal_marker for p in res.plays)


class TestRoundTrip:
    def test_dump_and_reload_identical(self, tmp_path):
        res = ingest.parse_plays(_csv(_row(), _row(play_index=2, down=1, play_type="other")))
        path = tmp_path / "plays.ndjson"
        ingest.dump_plays(res.plays, path)
        again = ingest.load_plays(path)
        assert again == res.plays

    def test_csv_round_trip(self, tmp_path):
        res = ingest.parse_plays(_csv(_row(), _row(play_index=2, down=1, play_type="other")))
        path = tmp_path / "plays.csv"
        ingest.plays_to_csv(res.plays, path)
        again = ingest.parse_plays(str(path))
        assert again.plays == res.plays
        assert again.rejects == []


def _mini_plays(n_games=10, plays_per_game=6):
    plays = []
    for g in range(n_games):
        for i in range(plays_per_game):
            down = (i % 4) + 1
            plays.append(PlayRecord(
                game_id=f"g{g}", drive_id=f"g{g}_d{i // 3}", play_index=i, win_loss=g % 2,
                game_seconds_remaining=3600 - 60 * i, score_differential=0,
                total_score=0, posteam_spread=0.0, total_points_line=40.0,
                yardline=50 - i, ydstogo=10, down=down, posteam_timeouts=3,
                defteam_timeouts=3, receive_2h_ko=0, home=1, era="2018-2022",
                posteam_coach="c", play_type="other",
            ))
    return plays


class TestSplit:
    def test_partition_property(self):
        plays = _mini_plays(20)
        split = ingest.make_split(plays, {"train": 0.5, "tune": 0.25, "test": 0.25}, seed=3)
        union = split.train_game_ids | split.tune_game_ids | split.test_game_ids
        assert len(union) == 20
        assert not split.train_game_ids & split.tune_game_ids
        assert not split.train_game_ids & split.test_game_ids
        assert not split.tune_game_ids & split.test_game_ids

    def test_deterministic(self):
        plays = _mini_plays(15)
        a = ingest.make_split(plays, {"train": 0.5, "tune": 0.25, "test": 0.25}, seed=9)
        b = ingest.make_split(plays, {"train": 0.5, "tune": 0.25, "test": 0.25}, seed=9)
        assert a == b

    def test_different_seed_differs(self):
        plays = _mini_plays(30)
        a = ingest.make_split(plays, {"train": 0.5, "tune": 0.25, "test": 0.25}, seed=1)
        b = ingest.make_split(plays, {"train": 0.5, "tune": 0.25, "test": 0.25}, seed=2)
        assert a.train_game_ids != b.train_game_ids

    def test_test_set_first_down_only(self):
        plays = _mini_plays(8)
        split = ingest.make_split(plays, {"train": 0.5, "tune": 0.25, "test": 0.25}, seed=0)
        assert all(p.down == 1 for p in split.test_plays(plays))
        downs = {p.down for p in split.train_plays(plays)}
        assert downs == {1, 2, 3, 4}

    def test_degenerate_game_count_errors(self):
        plays = _mini_plays(1)
        with pytest.raises(ingest.SplitError):
            ingest.make_split(plays, {"train": 0.5, "tune": 0.0, "test": 0.5}, seed=0)

    def test_bad_fractions_error(self):
        with pytest.raises(ingest.SplitError):
            ingest.make_split(_mini_plays(4), {"train": 0.6, "tune": 0.2, "test": 0.1}, seed=0)


def _pool_play(**kw):
    base = dict(
        game_id="g", drive_id="d", play_index=0, win_loss=1,
        game_seconds_remaining=100, score_differential=0, total_score=0,
        posteam_spread=0.0, total_points_line=40.0, yardline=50, ydstogo=10,
        down=1, posteam_timeouts=3, defteam_timeouts=3, receive_2h_ko=0,
        home=1, era="2018-2022", posteam_coach="c", play_type="other",
    )
    base.update(kw)
    return PlayRecord(**base)


class TestPools:
    def test_punt_pool_beyond_30_only(self):
        plays = [
            _pool_play(down=4, play_type="punt", yardline=25, next_yardline_after_punt=85),
            _pool_play(down=4, play_type="punt", yardline=55, next_yardline_after_punt=85),
        ]
        pools = ingest.filter_training_pools(plays)
        assert len(pools.punt_pool) == 1
        assert pools.punt_pool[0].yardline == 55

    def test_third_down_go_in_conversion_pool(self):
        plays = [_pool_play(down=3, play_type="go", yards_gained=4)]
        pools = ingest.filter_training_pools(plays)
        assert len(pools.conversion_pool) == 1

    def test_first_down_membership(self):
        plays = [_pool_play(down=1)]
        pools = ingest.filter_training_pools(plays)
        assert len(pools.first_down_pool) == 1
        assert len(pools.fourth_down_pool) == 0

    def test_terminal_rows_excluded_everywhere(self):
        plays = [_pool_play(down=1, yardline=0), _pool_play(down=1, yardline=100)]
        pools = ingest.filter_training_pools(plays)
        assert pools.summary()["first_down_pool"] == 0

    def test_empty_pools_flagged(self):
        pools = ingest.filter_training_pools([_pool_play(down=2)])
        assert "punt_pool" in pools.summary()["empty_pools"]
