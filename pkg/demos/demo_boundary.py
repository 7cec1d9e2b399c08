#!/usr/bin/env python3
"""Render a decision-boundary map in the terminal.

Fits a small ensemble, sweeps (yardline, ydstogo), and prints two maps:
the recommended decision with effect-size shading, and the same cells
shaded by bootstrap agreement, so the uncertain band around each boundary
is visible.

Run:
    python3 demos/demo_boundary.py
"""

import warnings

warnings.filterwarnings("ignore", message=r"dropping \d+ collinear")

from fourthdown.boosting import GbtParams
from fourthdown.bootstrap import ResamplePlan, fit_ensemble
from fourthdown.engine import FitConfig, FourthDownState, boundary_grid
from fourthdown.oracle import SyntheticWorld, simulate_history

SMALL = FitConfig(
    wp_params=GbtParams(max_depth=3, learning_rate=0.15, n_rounds=60, min_child_weight=5.0),
    synthetic_miss_count=150,
)

GLYPH = {"go": "G", "field_goal": "F", "punt": "P"}


def main():
    plays = simulate_history(SyntheticWorld(), 200, seed=42)
    print("fitting a B=21 ensemble on 200 simulated games...")
    ens = fit_ensemble(plays, ResamplePlan(seed=3, B=21), fit_config=SMALL)

    template = FourthDownState(yardline=50, ydstogo=5, game_seconds_remaining=1200,
                               score_differential=-3, total_score=23)
    ys = range(2, 99, 3)
    zs = range(1, 11)
    cells = boundary_grid(template, ys, zs, ens.point_model, ensemble=ens)
    by_pos = {(c["y"], c["z"]): c for c in cells}

    def render(title, shade):
        print(f"\n{title}")
        print("   (rows: yards to go;  columns: yards to opponent endzone 2..98)")
        for z in reversed(list(zs)):
            row = []
            for y in ys:
                c = by_pos[(y, z)]
                if c["best"] is None:
                    row.append(" ")
                else:
                    ch = GLYPH[c["best"]]
                    row.append(ch if shade(c) else ch.lower())
            print(f"{z:>3}|{''.join(row)}")
        print("     " + "".join("^" if y % 10 == 2 else " " for y in ys))
        print("   capital = strong, lowercase = weak")

    render("decision map, shaded by effect size (capital when gain > 1% WP)",
           lambda c: (c["effect_size"] or 0) > 0.01)
    render("same map, shaded by bootstrap agreement (capital when boot% >= 83)",
           lambda c: (c["boot_pct"] or 0) >= 83)


if __name__ == "__main__":
    main()
