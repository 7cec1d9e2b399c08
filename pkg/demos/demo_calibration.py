#!/usr/bin/env python3
"""Check the fitted win-probability model against exact ground truth.

The synthetic world admits exact win probabilities by backward induction,
so we can measure how close the boosted-tree estimate gets as the
training history grows, and where the residual error lives.

Run:
    python3 demos/demo_calibration.py
"""

import warnings

warnings.filterwarnings("ignore", message=r"dropping \d+ collinear")

import numpy as np

from fourthdown.boosting import GbtParams
from fourthdown.engine import FitConfig, fit_decision_model
from fourthdown.oracle import SyntheticWorld, ValueTable, simulate_history

FIT = FitConfig(wp_params=GbtParams(max_depth=4, learning_rate=0.1, n_rounds=250,
                                    min_child_weight=5.0))

FEATURES = ["score_differential", "game_seconds_remaining", "posteam_spread", "yardline",
            "receive_2h_ko", "posteam_timeouts", "defteam_timeouts", "total_score"]


def main():
    world = SyntheticWorld()
    print("solving the exact value function by backward induction...")
    table = ValueTable(world)

    probe_src = [p for p in simulate_history(world, 120, seed=999) if p.down == 1]
    rng = np.random.default_rng(1)
    probes = [probe_src[i] for i in rng.choice(len(probe_src), 2000, replace=False)]
    data = {f: np.asarray([getattr(p, f) for p in probes], dtype=float) for f in FEATURES}
    truth = np.asarray([
        table.true_wp(p.yardline, 1, p.score_differential,
                      p.game_seconds_remaining // world.seconds_per_play)
        for p in probes
    ])

    print(f"{'games':>8}{'plays':>9}{'MAE':>9}{'p90 |err|':>11}")
    for n_games in (125, 250, 500, 1000):
        plays = simulate_history(world, n_games, seed=100)
        model = fit_decision_model(plays, config=FIT)
        err = np.abs(model.wp_model.predict_wp1(data) - truth)
        print(f"{n_games:>8}{len(plays):>9}{err.mean():>9.4f}{np.quantile(err, 0.9):>11.4f}")

    print("\nerror by clock (500-game fit):")
    plays = simulate_history(world, 500, seed=100)
    model = fit_decision_model(plays, config=FIT)
    err = np.abs(model.wp_model.predict_wp1(data) - truth)
    seconds = data["game_seconds_remaining"]
    for lo, hi in [(1, 600), (600, 1800), (1800, 3000), (3000, 3600)]:
        m = (seconds >= lo) & (seconds < hi)
        if m.any():
            print(f"  {lo:>5}-{hi:<5}s: MAE {err[m].mean():.4f} over {int(m.sum())} probes")


if __name__ == "__main__":
    main()
