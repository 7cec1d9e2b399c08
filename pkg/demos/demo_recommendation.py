#!/usr/bin/env python3
"""Walk through one fourth-down recommendation, end to end.

Simulates a small synthetic league, fits the decision model and a
bootstrap ensemble, then interrogates a single game state: per-decision
win probabilities, the recommendation, how sure the bootstrap is about
it, and how the answer moves as the spot changes.

Run:
    python3 demos/demo_recommendation.py
"""

import warnings

warnings.filterwarnings("ignore", message=r"dropping \d+ collinear")

from fourthdown.boosting import GbtParams
from fourthdown.bootstrap import ResamplePlan, fit_ensemble, uncertainty_batch
from fourthdown.engine import FitConfig, FourthDownState, evaluate
from fourthdown.oracle import SyntheticWorld, simulate_history

SMALL = FitConfig(
    wp_params=GbtParams(max_depth=3, learning_rate=0.15, n_rounds=60, min_child_weight=5.0),
    synthetic_miss_count=150,
)


def main():
    print("simulating 200 games of synthetic history...")
    plays = simulate_history(SyntheticWorld(), 200, seed=42)
    print(f"  {len(plays)} plays")

    print("fitting the point model and a B=31 cluster-bootstrap ensemble...")
    ensemble = fit_ensemble(plays, ResamplePlan(seed=7, B=31), fit_config=SMALL)

    state = FourthDownState(
        yardline=36, ydstogo=2, game_seconds_remaining=445,
        score_differential=-3, total_score=23,
    )
    print(f"\nscenario: 4th & {state.ydstogo} at the {state.yardline}, "
          f"down {-state.score_differential} with {state.game_seconds_remaining}s left\n")

    dv = evaluate(state, ensemble.point_model)
    report = uncertainty_batch([state], ensemble)[0]

    print(f"{'decision':<12}{'WP':>8}{'P(success)':>12}")
    for name, wp, p in [("go", dv.wp_go, dv.detail["p_conversion"]),
                        ("field_goal", dv.wp_fg, dv.detail["p_fg_make"]),
                        ("punt", dv.wp_punt, None)]:
        p_txt = "" if p is None else f"{p:.3f}"
        wp_txt = "  n/a" if wp is None else f"{wp:.4f}"
        print(f"{name:<12}{wp_txt:>8}{p_txt:>12}")

    print(f"\nrecommendation: {report.decision}")
    print(f"effect size:    {100 * report.point_effect_size:+.2f}% WP over the runner-up")
    print(f"boot%:          {report.boot_pct:.1f} -> {report.bin}")
    print(f"90% CI:         [{100 * report.ci_lo:+.2f}%, {100 * report.ci_hi:+.2f}%]")

    print("\nwhat-if: sliding the spot while holding everything else fixed")
    states = [FourthDownState(yardline=y, ydstogo=2, game_seconds_remaining=445,
                              score_differential=-3, total_score=23)
              for y in (20, 30, 40, 50, 60, 70)]
    for s, r in zip(states, uncertainty_batch(states, ensemble)):
        print(f"  at the {s.yardline:>2}: {r.decision:<11} boot% {r.boot_pct:5.1f}  ({r.bin})")


if __name__ == "__main__":
    main()
