import numpy as np
import pytest

from fourthdown import boosting
from fourthdown.boosting import GbtParams


def _monotone_problem(rng, n):
    """Synthetic binary data with known monotone structure in x0 (+) and x1 (-)."""
    x = np.column_stack([
        rng.uniform(-3, 3, n),
        rng.uniform(-3, 3, n),
        rng.uniform(0, 1, n),
    ])
    eta = 1.2 * x[:, 0] - 0.8 * x[:, 1] + np.sin(3 * x[:, 2])
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-eta))).astype(float)
    return x, y


NAMES = ["x0", "x1", "x2"]
CONS = [1, -1, 0]


def test_all_positive_labels_predicts_near_one():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, 3))
    model = boosting.fit_gbt(x, np.ones(200), NAMES, CONS, GbtParams(n_rounds=20))
    assert np.all(model.predict_proba(x) >= 0.99)


def test_structural_audit_passes():
    rng = np.random.default_rng(1)
    x, y = _monotone_problem(rng, 3000)
    model = boosting.fit_gbt(x, y, NAMES, CONS, GbtParams(n_rounds=40, max_depth=4))
    assert boosting.audit_monotonicity(model) == []


def test_probe_pair_monotonicity():
    rng = np.random.default_rng(2)
    x, y = _monotone_problem(rng, 5000)
    model = boosting.fit_gbt(x, y, NAMES, CONS, GbtParams(n_rounds=60, max_depth=4))
    probes = rng.uniform(-3, 3, size=(2000, 3))
    for f, cons in [(0, 1), (1, -1)]:
        lo = probes.copy()
        hi = probes.copy()
        bump = rng.uniform(0.1, 2.0, 2000)
        hi[:, f] += bump
        d = model.predict_proba(hi) - model.predict_proba(lo)
        if cons > 0:
            assert np.all(d >= -1e-12)
        else:
            assert np.all(d <= 1e-12)


def test_deterministic_refit_bit_identical():
    rng = np.random.default_rng(3)
    x, y = _monotone_problem(rng, 1500)
    m1 = boosting.fit_gbt(x, y, NAMES, CONS, GbtParams(n_rounds=25))
    m2 = boosting.fit_gbt(x, y, NAMES, CONS, GbtParams(n_rounds=25))
    assert m1.dumps() == m2.dumps()


def test_depth_one_single_tree_matches_closed_form():
    """One boosting step on one binary feature against the analytic solution."""
    rng = np.random.default_rng(4)
    x = rng.integers(0, 2, size=400).astype(float).reshape(-1, 1)
    y = (rng.uniform(size=400) < np.where(x[:, 0] > 0, 0.7, 0.3)).astype(float)
    lam = 1.0
    params = GbtParams(n_rounds=1, max_depth=1, learning_rate=1.0, reg_lambda=lam,
                       min_child_weight=1e-9)
    model = boosting.fit_gbt(x, y, ["x"], [0], params)

    p0 = y.mean()
    base = np.log(p0 / (1 - p0))
    grad = p0 - y
    hess = np.full_like(y, p0 * (1 - p0))
    mask = x[:, 0] <= 0
    w_left = -grad[mask].sum() / (hess[mask].sum() + lam)
    w_right = -grad[~mask].sum() / (hess[~mask].sum() + lam)

    np.testing.assert_allclose(model.base_score, base, atol=1e-12)
    tree = model.trees[0]
    np.testing.assert_allclose(
        sorted(tree.value[tree.feature == -1]), sorted([w_left, w_right]), atol=1e-12
    )
    pred_left = 1 / (1 + np.exp(-(base + w_left)))
    got = model.predict_proba(np.array([[0.0]]))
    np.testing.assert_allclose(got, [pred_left], atol=1e-12)


def test_weighted_fit_equals_duplicated_rows():
    rng = np.random.default_rng(5)
    x, y = _monotone_problem(rng, 300)
    reps = rng.integers(1, 4, size=300)
    m_w = boosting.fit_gbt(x, y, NAMES, CONS, GbtParams(n_rounds=10),
                           weights=reps.astype(float))
    m_dup = boosting.fit_gbt(np.repeat(x, reps, axis=0), np.repeat(y, reps),
                             NAMES, CONS, GbtParams(n_rounds=10))
    probes = rng.normal(size=(50, 3))
    np.testing.assert_allclose(m_w.predict_proba(probes), m_dup.predict_proba(probes),
                               atol=1e-9)


def test_early_stopping_truncates():
    rng = np.random.default_rng(6)
    x, y = _monotone_problem(rng, 2000)
    xt, yt = _monotone_problem(rng, 800)
    params = GbtParams(n_rounds=400, max_depth=3, early_stopping_patience=10)
    model = boosting.fit_gbt(x, y, NAMES, CONS, params, tune=(xt, yt))
    assert 0 < len(model.trees) < 400
    assert model.best_tune_logloss < np.log(2)


def test_model_beats_fair_coin_on_own_tune_set():
    rng = np.random.default_rng(7)
    x, y = _monotone_problem(rng, 2000)
    xt, yt = _monotone_problem(rng, 700)
    model, report = boosting.fit_gbt_grid(
        x, y, NAMES, CONS,
        [GbtParams(n_rounds=80, max_depth=d) for d in (2, 3)],
        xt, yt,
    )
    ll = boosting.logloss(yt, model.predict_proba(xt))
    assert ll <= np.log(2)
    assert len(report) == 2


def test_empty_grid_raises():
    with pytest.raises(boosting.BoostError):
        boosting.fit_gbt_grid(np.zeros((10, 1)), np.zeros(10), ["x"], [0], [],
                              np.zeros((5, 1)), np.zeros(5))


def test_serialization_round_trip():
    rng = np.random.default_rng(8)
    x, y = _monotone_problem(rng, 500)
    model = boosting.fit_gbt(x, y, NAMES, CONS, GbtParams(n_rounds=12))
    clone = boosting.GbtModel.loads(model.dumps())
    probes = rng.normal(size=(40, 3))
    np.testing.assert_array_equal(model.predict_proba(probes), clone.predict_proba(probes))
    assert clone.dumps() == model.dumps()


def test_multiclass_probabilities_sum_to_one():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(1200, 3))
    labels = np.where(x[:, 0] > 0.5, "go", np.where(x[:, 1] > 0, "punt", "field_goal"))
    model = boosting.fit_gbt_multiclass(
        x, labels, ["go", "field_goal", "punt"], NAMES, GbtParams(n_rounds=15)
    )
    p = model.predict_proba(rng.normal(size=(1000, 3)))
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(p >= 0)


def test_multiclass_missing_class_raises():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(100, 3))
    labels = np.array(["go"] * 100)
    with pytest.raises(boosting.BoostError):
        boosting.fit_gbt_multiclass(x, labels, ["go", "punt"], NAMES, GbtParams(n_rounds=2))


def test_feature_importance_shares():
    rng = np.random.default_rng(11)
    x, y = _monotone_problem(rng, 2000)
    model = boosting.fit_gbt(x, y, NAMES, CONS, GbtParams(n_rounds=30))
    imp = model.feature_importance()
    assert abs(sum(imp.values()) - 1.0) < 1e-9
    assert imp["x0"] > imp["x2"]
