"""Command-line surface for the fourth-down pipeline.

Conventions: structured logs go to standard error, data to files or
standard output; every artifact-producing command writes a
`<out>.manifest.json` run manifest; all randomness is seeded by flags;
exit codes are 0 (success), 1 (runtime error), 2 (usage error).
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import click
import numpy as np

from . import __version__
from .boosting import GbtParams
from .bootstrap import (
    BootstrapEnsemble,
    ResamplePlan,
    fit_ensemble,
    overconfidence_summary,
    play_to_state,
    stability_analysis,
    stability_histogram,
    uncertainty_batch,
)
from .coach import CoachModel, coach_agreement, fit_coach, importance_rows
from .config import default_config, load_config
from .engine import FitConfig, FourthDownState, boundary_grid, fit_decision_model
from .ingest import dump_plays, filter_training_pools, load_plays, make_split, parse_plays, plays_to_csv
from .oracle import SyntheticWorld, simulate_history
from .wpmodel import fit_baseline, fit_wp_model, prediction_contest

logger = logging.getLogger("fourthdown")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path, command: str, params: dict, inputs: list, outputs: list, t0: float):
    manifest = {
        "command": command,
        "params": params,
        "inputs": {str(p): _sha256(p) for p in inputs if Path(p).exists()},
        "outputs": [str(p) for p in outputs],
        "elapsed_seconds": round(time.time() - t0, 3),
        "version": __version__,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2))
    logger.info("manifest written to %s", path)


def _runtime_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:
            logger.error("%s", exc)
            sys.exit(1)

    return wrapper


def _write_csv(path, rows: list[dict], columns: list[str]):
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if row.get(c) is None else row.get(c) for c in columns])


STATE_OPTIONS = [
    click.option("--yardline", type=int, required=True, help="yards to the opponent endzone"),
    click.option("--ydstogo", type=int, required=True),
    click.option("--seconds", "game_seconds_remaining", type=int, required=True),
    click.option("--score-diff", "score_differential", type=int, required=True),
    click.option("--spread", "posteam_spread", type=float, default=0.0, show_default=True),
    click.option("--total-line", "total_points_line", type=float, default=44.0, show_default=True),
    click.option("--posteam-timeouts", type=int, default=3, show_default=True),
    click.option("--defteam-timeouts", type=int, default=3, show_default=True),
    click.option("--receive-2h-ko", type=int, default=0, show_default=True),
    click.option("--home", type=int, default=0, show_default=True),
    click.option("--total-score", type=int, default=0, show_default=True),
    click.option("--kq", type=float, default=0.0, show_default=True),
    click.option("--pq", type=float, default=0.0, show_default=True),
]


def state_options(fn):
    for opt in reversed(STATE_OPTIONS):
        fn = opt(fn)
    return fn


def _state_from_kwargs(kw) -> FourthDownState:
    return FourthDownState(
        yardline=kw["yardline"],
        ydstogo=kw["ydstogo"],
        game_seconds_remaining=kw["game_seconds_remaining"],
        score_differential=kw["score_differential"],
        posteam_spread=kw["posteam_spread"],
        total_points_line=kw["total_points_line"],
        posteam_timeouts=kw["posteam_timeouts"],
        defteam_timeouts=kw["defteam_timeouts"],
        receive_2h_ko=kw["receive_2h_ko"],
        home=kw["home"],
        total_score=kw["total_score"],
        kq=kw["kq"],
        pq=kw["pq"],
    )


def _fit_config_from(cfg: dict[str, str]) -> FitConfig:
    params = GbtParams(
        max_depth=int(cfg.get("wp_depth", 4)),
        learning_rate=float(cfg.get("wp_learning_rate", 0.1)),
        n_rounds=int(cfg.get("wp_rounds", 250)),
        min_child_weight=float(cfg.get("wp_min_child_weight", 5.0)),
        early_stopping_patience=int(cfg.get("wp_patience", 50)),
    )
    return FitConfig(
        wp_params=params,
        synthetic_miss_count=int(cfg.get("synthetic_miss_count", 500)),
        synthetic_miss_seed=int(cfg.get("synthetic_miss_seed", 0)),
        punt_available_above=int(cfg.get("punt_available_above", 30)),
        fg_available_upto=int(cfg.get("fg_available_upto", 50)),
    )


@click.group()
@click.version_option(__version__)
def main():
    """Fourth-down decision engine with bootstrap uncertainty."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    warnings.simplefilter("once")


@main.command()
@click.option("--world", "world_path", type=click.Path(exists=True), default=None,
              help="world config JSON; defaults to the built-in world")
@click.option("--games", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(), required=True)
@_runtime_errors
def simulate(world_path, games, seed, out):
    """Simulate a synthetic history and write it as CSV."""
    t0 = time.time()
    world = SyntheticWorld.from_file(world_path) if world_path else SyntheticWorld()
    plays = simulate_history(world, games, seed)
    plays_to_csv(plays, out)
    click.echo(f"wrote {len(plays)} plays to {out}", err=True)
    _write_manifest(out, "simulate",
                    {"world": world_path, "games": games, "seed": seed},
                    [world_path] if world_path else [], [out], t0)


@main.command()
@click.option("--csv", "csv_path", type=click.Path(exists=True), required=True)
@click.option("--colmap", type=click.Path(exists=True), default=None,
              help="key = value file mapping canonical fields to CSV headers")
@click.option("--seasons", type=str, default=None,
              help="keep only seasons in an inclusive lo:hi range, e.g. 2006:2021")
@click.option("--out", type=click.Path(), required=True, help="accepted records (NDJSON)")
@click.option("--rejects", type=click.Path(), default=None, help="reject log (TSV)")
@_runtime_errors
def ingest(csv_path, colmap, seasons, out, rejects):
    """Parse and validate a play-by-play CSV."""
    t0 = time.time()
    schema = load_config(colmap) if colmap else {}
    result = parse_plays(csv_path, schema=schema)
    if seasons:
        lo_s, _, hi_s = seasons.partition(":")
        lo, hi = int(lo_s), int(hi_s or lo_s)
        before = len(result.plays)
        result.plays = [p for p in result.plays
                        if p.season is not None and lo <= p.season <= hi]
        logger.info("season filter %d:%d kept %d of %d plays", lo, hi,
                    len(result.plays), before)
    dump_plays(result.plays, out)
    if rejects:
        result.write_reject_log(rejects)
    pools = filter_training_pools(result.plays)
    click.echo(
        f"rows={result.n_rows} accepted={len(result.plays)} rejected={len(result.rejects)} "
        f"pools={json.dumps(pools.summary())}",
        err=True,
    )
    _write_manifest(out, "ingest", {"csv": csv_path, "colmap": colmap},
                    [csv_path] + ([colmap] if colmap else []),
                    [out] + ([rejects] if rejects else []), t0)


@main.command()
@click.option("--dataset", type=click.Path(exists=True), required=True, help="NDJSON play dump")
@click.option("--fit-config", "fit_config_path", type=click.Path(exists=True), default=None)
@click.option("--kq-table-out", type=click.Path(), default=None,
              help="CSV export of per-attempt kicker quality")
@click.option("--pq-table-out", type=click.Path(), default=None,
              help="CSV export of per-attempt punter quality")
@click.option("--out", type=click.Path(), required=True)
@_runtime_errors
def fit(dataset, fit_config_path, kq_table_out, pq_table_out, out):
    """Fit a decision model (WP model + transition models + quality)."""
    t0 = time.time()
    cfg = load_config(fit_config_path) if fit_config_path else default_config()
    plays = load_plays(dataset)
    model = fit_decision_model(plays, config=_fit_config_from(cfg))
    model.save(out)
    if kq_table_out or pq_table_out:
        from .engine import quality_tables

        kq_rows, pq_rows = quality_tables(plays)
        if kq_table_out:
            _write_csv(kq_table_out, kq_rows, ["player_id", "attempt_index", "quality"])
        if pq_table_out:
            _write_csv(pq_table_out, pq_rows, ["player_id", "attempt_index", "quality"])
    click.echo(f"model written to {out}", err=True)
    _write_manifest(out, "fit", {"dataset": dataset, "fit_config": fit_config_path},
                    [dataset] + ([fit_config_path] if fit_config_path else []), [out], t0)


@main.command()
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--fit-config", "fit_config_path", type=click.Path(exists=True), default=None)
@click.option("--b", "--B", "n_replicates", type=int, default=101, show_default=True)
@click.option("--fraction", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="ensemble directory")
@_runtime_errors
def bootstrap(dataset, fit_config_path, n_replicates, fraction, seed, jobs, out):
    """Fit a bootstrap ensemble of decision models."""
    t0 = time.time()
    cfg = load_config(fit_config_path) if fit_config_path else default_config()
    plays = load_plays(dataset)
    plan = ResamplePlan(seed=seed, B=n_replicates, fraction=fraction)
    ens = fit_ensemble(plays, plan, fit_config=_fit_config_from(cfg), n_jobs=jobs)
    ens.save(out)
    click.echo(f"ensemble (B={plan.B}) written to {out}", err=True)
    _write_manifest(Path(out) / "ensemble", "bootstrap",
                    {"dataset": dataset, "B": n_replicates, "fraction": fraction,
                     "seed": seed, "fit_config": fit_config_path},
                    [dataset], [out], t0)


@main.command()
@click.option("--ensemble", "ensemble_dir", type=click.Path(exists=True), required=True)
@state_options
@click.option("--gains-out", type=click.Path(), default=None,
              help="CSV of the bootstrapped gains (histogram data)")
@_runtime_errors
def recommend(ensemble_dir, gains_out, **kw):
    """Decision table with WP, boot%, confidence interval, and bin."""
    ens = BootstrapEnsemble.load(ensemble_dir)
    state = _state_from_kwargs(kw)
    report = uncertainty_batch([state], ens)[0]
    from .engine import evaluate

    dv = evaluate(state, ens.point_model)
    click.echo(f"recommended: {report.decision}  (boot% {report.boot_pct:.1f}, bin {report.bin})")
    click.echo(
        f"effect size {100 * (report.point_effect_size or 0):+.2f}% WP;  "
        f"{int(report.level * 100)}% CI [{100 * report.ci_lo:+.2f}%, {100 * report.ci_hi:+.2f}%]"
    )
    click.echo("")
    header = f"{'decision':<12}{'WP':>8}{'P(success)':>12}{'WP|success':>12}{'WP|failure':>12}"
    click.echo(header)
    rows = [
        ("go", dv.wp_go, dv.detail["p_conversion"], dv.detail["wp_go_success"],
         dv.detail["wp_go_failure"]),
        ("field_goal", dv.wp_fg, dv.detail["p_fg_make"], dv.detail["wp_fg_make"],
         dv.detail["wp_fg_miss"]),
        ("punt", dv.wp_punt, None, None, None),
    ]
    for name, wp, p_s, wp_s, wp_f in rows:
        if wp is None:
            click.echo(f"{name:<12}{'n/a':>8}")
            continue
        p_s = "" if p_s is None else f"{p_s:.3f}"
        wp_s = "" if wp_s is None else f"{wp_s:.3f}"
        wp_f = "" if wp_f is None else f"{wp_f:.3f}"
        click.echo(f"{name:<12}{wp:>8.4f}{p_s:>12}{wp_s:>12}{wp_f:>12}")
    if gains_out:
        _write_csv(gains_out, [{"gain": g} for g in report.gains], ["gain"])
        click.echo(f"gains written to {gains_out}", err=True)


@main.command()
@click.option("--ensemble", "ensemble_dir", type=click.Path(exists=True), required=True)
@state_options
@click.option("--y-min", type=int, default=1, show_default=True)
@click.option("--y-max", type=int, default=99, show_default=True)
@click.option("--z-min", type=int, default=1, show_default=True)
@click.option("--z-max", type=int, default=10, show_default=True)
@click.option("--mode", type=click.Choice(["point", "boot"]), default="point", show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_runtime_errors
def boundary(ensemble_dir, y_min, y_max, z_min, z_max, mode, out, **kw):
    """Decision-boundary grid CSV over yardline and ydstogo."""
    t0 = time.time()
    ens = BootstrapEnsemble.load(ensemble_dir)
    # yardline/ydstogo of the template are swept per cell; the other state
    # flags hold the rest of the scenario fixed.
    template = _state_from_kwargs(kw)
    cells = boundary_grid(
        template, range(y_min, y_max + 1), range(z_min, z_max + 1),
        ens.point_model, ensemble=ens if mode == "boot" else None,
    )
    for c in cells:
        if c["effect_size"] is not None:
            c["effect_size"] = f"{c['effect_size']:.6f}"
        if c["boot_pct"] is not None:
            c["boot_pct"] = f"{c['boot_pct']:.4f}"
    _write_csv(out, cells, ["y", "z", "best", "effect_size", "boot_pct"])
    click.echo(f"grid written to {out}", err=True)
    _write_manifest(out, "boundary",
                    {"ensemble": ensemble_dir, "mode": mode,
                     "y": [y_min, y_max], "z": [z_min, z_max], **kw},
                    [], [out], t0)


@main.command()
@click.option("--ensemble", "ensemble_dir", type=click.Path(exists=True), required=True)
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@_runtime_errors
def overconfidence(ensemble_dir, dataset, out):
    """Effect-size distribution and confidence shares over fourth downs."""
    t0 = time.time()
    ens = BootstrapEnsemble.load(ensemble_dir)
    plays = load_plays(dataset)
    pools = filter_training_pools(plays)
    summary = overconfidence_summary(pools.fourth_down_pool, ens)
    rows = summary["bins"]
    _write_csv(out, rows, ["effect_lo_pct", "effect_hi_pct", "count", "share",
                           "confident", "lean", "uncertain"])
    g = summary["global"]
    click.echo(
        f"n={summary['n_plays']} confident={g['confident']:.3f} "
        f"lean={g['lean']:.3f} uncertain={g['uncertain']:.3f}"
    )
    _write_manifest(out, "overconfidence", {"ensemble": ensemble_dir, "dataset": dataset},
                    [dataset], [out], t0)


@main.command(name="fit-coach")
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--importance-out", type=click.Path(), default=None)
@_runtime_errors
def fit_coach_cmd(dataset, out, importance_out):
    """Fit the baseline coach-decision model."""
    t0 = time.time()
    plays = load_plays(dataset)
    pools = filter_training_pools(plays)
    model = fit_coach(pools.fourth_down_pool)
    model.save(out)
    if importance_out:
        _write_csv(importance_out, importance_rows(model), ["feature", "gain_share"])
    click.echo(f"coach model written to {out}", err=True)
    _write_manifest(out, "fit-coach", {"dataset": dataset}, [dataset],
                    [out] + ([importance_out] if importance_out else []), t0)


@main.command(name="coach-eval")
@click.option("--ensemble", "ensemble_dir", type=click.Path(exists=True), required=True)
@click.option("--coach-model", "coach_model_path", type=click.Path(exists=True), default=None)
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@_runtime_errors
def coach_eval(ensemble_dir, coach_model_path, dataset, out):
    """Per-coach agreement over confident plays."""
    t0 = time.time()
    ens = BootstrapEnsemble.load(ensemble_dir)
    coach_model = CoachModel.load(coach_model_path) if coach_model_path else None
    plays = load_plays(dataset)
    pools = filter_training_pools(plays)
    result = coach_agreement(pools.fourth_down_pool, ens, coach_model)
    _write_csv(out, result["table"], ["coach", "confident_plays", "agreement"])
    click.echo(
        f"confident={result['n_confident']} global={result['global_agreement']:.3f} "
        f"kick={result['agreement_when_model_says_kick']:.3f} "
        f"go={result['agreement_when_model_says_go']:.3f}"
    )
    _write_manifest(out, "coach-eval",
                    {"ensemble": ensemble_dir, "dataset": dataset,
                     "coach_model": coach_model_path},
                    [dataset], [out], t0)


@main.command()
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--bs", "--Bs", "b_list", type=str, default="11,51", show_default=True,
              help="comma-separated candidate B values (odd)")
@click.option("--m", "--M", "m_draws", type=int, default=20, show_default=True)
@click.option("--probes", type=int, default=50, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--fit-config", "fit_config_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True, help="output directory")
@_runtime_errors
def stability(dataset, b_list, m_draws, probes, seed, jobs, fit_config_path, out):
    """Stability of the confidence binning as a function of B."""
    t0 = time.time()
    plays = load_plays(dataset)
    cfg = load_config(fit_config_path) if fit_config_path else default_config()
    pools = filter_training_pools(plays)
    rng = np.random.default_rng(seed)
    fourth = pools.fourth_down_pool
    idx = rng.choice(len(fourth), size=min(probes, len(fourth)), replace=False)
    probe_states = [play_to_state(fourth[i]) for i in idx]
    bs = [int(tok) for tok in b_list.split(",") if tok.strip()]
    result = stability_analysis(
        plays, bs, m_draws, probe_states,
        fit_config=_fit_config_from(cfg), base_seed=seed, n_jobs=jobs,
    )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = [{"B": b, "p_bar": result["results"][b]["p_bar"]} for b in bs]
    _write_csv(out_dir / "stability.csv", table, ["B", "p_bar"])
    for b in bs:
        hist = stability_histogram(result["results"][b]["p_i"])
        _write_csv(out_dir / f"p_i_hist_B{b}.csv", hist, ["lo", "hi", "count"])
    click.echo(json.dumps({"p_bar": {str(b): result["results"][b]["p_bar"] for b in bs},
                           "config": result["config"]}))
    _write_manifest(out_dir / "stability", "stability",
                    {"dataset": dataset, "Bs": bs, "M": m_draws, "probes": probes,
                     "seed": seed}, [dataset], [str(out_dir)], t0)


@main.command()
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(), required=True)
@_runtime_errors
def contest(dataset, seed, out):
    """First-down WP prediction contest across feature sets."""
    t0 = time.time()
    plays = load_plays(dataset)
    split = make_split(plays, {"train": 0.5, "tune": 0.25, "test": 0.25}, seed=seed)
    train = split.train_plays(plays)
    tune = split.tune_plays(plays)
    test = split.test_plays(plays)
    prm = GbtParams(max_depth=4, learning_rate=0.1, n_rounds=300,
                    min_child_weight=5.0, early_stopping_patience=50)
    proposed = fit_wp_model(train, tune_plays=tune, params=prm)
    models = {
        "proposed_first_down": proposed.predict_wp1,
        "lock_nettleton_features": fit_baseline("lock_nettleton", train, tune_plays=tune, params=prm).predict,
        "baldwin_features": fit_baseline("baldwin", train, tune_plays=tune, params=prm).predict,
        "spread_only": fit_baseline("spread_only", train).predict,
        "fair_coin": fit_baseline("fair_coin", train).predict,
    }
    rows = prediction_contest(models, test)
    _write_csv(out, rows, ["model", "logloss", "reduction_vs_fair_coin_pct"])
    for r in rows:
        click.echo(f"{r['model']:<28}{r['logloss']:.4f}  {r['reduction_vs_fair_coin_pct']:+.2f}%")
    _write_manifest(out, "contest", {"dataset": dataset, "seed": seed}, [dataset], [out], t0)


@main.command()
@click.option("--ensemble", "ensemble_dir", type=click.Path(exists=True), required=True)
@click.option("--coach-model", "coach_model_path", type=click.Path(exists=True), default=None)
@click.option("--listen", type=str, default="127.0.0.1:8040", show_default=True)
@click.option("--cors-origin", type=str, multiple=True)
@_runtime_errors
def serve(ensemble_dir, coach_model_path, listen, cors_origin):
    """Serve the what-if inference API over HTTP."""
    import uvicorn

    from .service import create_app

    host, _, port = listen.partition(":")
    app = create_app(ensemble_dir, coach_model_path=coach_model_path,
                     cors_origins=list(cors_origin))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8040), log_level="info")


if __name__ == "__main__":
    main()
