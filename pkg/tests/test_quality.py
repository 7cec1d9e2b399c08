import numpy as np
import pytest

from fourthdown import glm, quality


def direct_sum_oracle(residuals, gamma, alpha):
    """Direct summation of the decayed shrunken mean, no recursion."""
    r = np.asarray(residuals, dtype=float)
    out = np.zeros(r.size)
    for n in range(1, r.size):
        weights = alpha ** (n - 1 - np.arange(n))
        out[n] = np.sum(weights * r[:n]) / (gamma + np.sum(weights))
    return out


class TestRollingQuality:
    def test_first_attempt_is_zero(self):
        out = quality.rolling_quality([0.5, -0.2, 0.1], gamma=96, alpha=0.985)
        assert out[0] == 0.0

    def test_single_prior_residual_kicker_defaults(self):
        out = quality.rolling_quality([0.1, 0.0], gamma=96, alpha=0.985)
        np.testing.assert_allclose(out[1], 0.1 / 97.0, atol=1e-12)

    def test_matches_direct_summation_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            r = rng.normal(scale=0.3, size=int(rng.integers(2, 400)))
            ours = quality.rolling_quality(r, gamma=150, alpha=0.99)
            np.testing.assert_allclose(ours, direct_sum_oracle(r, 150, 0.99), atol=1e-12)

    def test_half_weight_at_lag_45(self):
        # An attempt 46 kicks back carries about half the previous kick's weight.
        assert abs(0.985 ** 45 - 0.5) < 0.01

    def test_half_weight_through_impulse_response(self):
        # The same fact observed through the rolling mean itself: a unit
        # residual 46 attempts back contributes about half what one placed
        # on the previous attempt does.
        n = 60
        recent = np.zeros(n)
        recent[n - 2] = 1.0  # previous attempt
        old = np.zeros(n)
        old[n - 47] = 1.0  # 46 attempts back
        q_recent = quality.rolling_quality(recent, gamma=96, alpha=0.985)[n - 1]
        q_old = quality.rolling_quality(old, gamma=96, alpha=0.985)[n - 1]
        np.testing.assert_allclose(q_old / q_recent, 0.985 ** 45, atol=1e-12)
        assert abs(q_old / q_recent - 0.5) < 0.01

    def test_no_lookahead(self):
        rng = np.random.default_rng(8)
        r = rng.normal(size=50)
        base = quality.rolling_quality(r, gamma=10, alpha=0.9)
        r2 = r.copy()
        r2[20] += 1.0
        bumped = quality.rolling_quality(r2, gamma=10, alpha=0.9)
        np.testing.assert_array_equal(base[: 21], bumped[: 21])
        assert np.all(bumped[21:] != base[21:])

    def test_shrinkage_decreasing_in_gamma(self):
        r = np.array([0.4, 0.4, 0.4, 0.4])
        small = quality.rolling_quality(r, gamma=5, alpha=0.99)
        big = quality.rolling_quality(r, gamma=50, alpha=0.99)
        assert np.all(np.abs(big[1:]) < np.abs(small[1:]))

    def test_alpha_one_gamma_zero_limit_is_running_mean(self):
        r = np.array([1.0, 2.0, 3.0, 4.0])
        out = quality.rolling_quality(r, gamma=1e-12, alpha=1.0)
        np.testing.assert_allclose(out[1:], [1.0, 1.5, 2.0], atol=1e-9)

    def test_parameter_validation(self):
        with pytest.raises(quality.QualityError):
            quality.rolling_quality([0.1], gamma=0.0, alpha=0.9)
        with pytest.raises(quality.QualityError):
            quality.rolling_quality([0.1], gamma=1.0, alpha=1.0001)


class TestFgpa:
    def test_direct_substitution(self):
        np.testing.assert_allclose(quality.fgpa([1], [0.9]), [0.1], atol=1e-15)
        np.testing.assert_allclose(quality.fgpa([0], [0.9]), [-0.9], atol=1e-15)
        np.testing.assert_allclose(quality.fgpa([1], [0.5]), [0.5], atol=1e-15)

    def test_range(self):
        rng = np.random.default_rng(1)
        made = rng.integers(0, 2, 100)
        p = rng.uniform(0.01, 0.99, 100)
        v = quality.fgpa(made, p)
        assert np.all((v > -1) & (v < 1))


class TestBaselines:
    def test_fg_baseline_monotone_decreasing_on_grid(self):
        rng = np.random.default_rng(12)
        yardline = rng.integers(1, 46, size=4000).astype(float)
        p_true = 1 / (1 + np.exp(-(4.0 - 0.12 * yardline)))
        made = (rng.uniform(size=4000) < p_true).astype(float)
        model = quality.fit_baseline_fg(yardline, made)
        grid = np.arange(1.0, 46.0)
        pred = model.predict({"yardline": grid})
        assert np.all((pred > 0) & (pred < 1))
        assert np.all(np.diff(pred) < 0)

    def test_fg_baseline_all_made_errors(self):
        with pytest.raises(glm.SeparationError):
            quality.fit_baseline_fg(np.arange(1.0, 30.0), np.ones(29))

    def test_punt_baseline_residuals_mean_zero(self):
        rng = np.random.default_rng(13)
        yardline = rng.uniform(31, 99, size=2000)
        nxt = 100 - yardline + 40 + rng.normal(scale=6, size=2000)
        nxt = np.minimum(nxt, 80)
        model = quality.fit_baseline_punt(yardline, nxt)
        resid = quality.pyoe(nxt, model.predict({"yardline": yardline}))
        assert abs(resid.mean()) < 1e-6

    def test_pyoe_identity(self):
        np.testing.assert_allclose(quality.pyoe([20.0], [25.0]), [-5.0])
        np.testing.assert_allclose(quality.pyoe([25.0], [25.0]), [0.0])


class TestTeamQuality:
    def test_raw_arithmetic_exact(self):
        off, dfn = quality.team_quality_raw([44.0], [-6.0])
        assert off[0] == 25.0
        assert dfn[0] == 19.0

    def test_zero_spread_symmetry(self):
        off, dfn = quality.team_quality_raw([44.0], [0.0])
        assert off[0] == dfn[0] == 22.0

    def test_standardized_population_moments(self):
        rng = np.random.default_rng(14)
        tp = rng.uniform(35, 55, 5000)
        ps = rng.uniform(-14, 14, 5000)
        off, _ = quality.team_quality_raw(tp, ps)
        std = quality.Standardizer.fit(off)
        z = std.apply(off)
        assert abs(z.mean()) < 1e-9
        assert abs(z.std() - 1) < 1e-9

    def test_degenerate_population_maps_to_zero(self):
        std = quality.Standardizer.fit(np.full(10, 20.0))
        np.testing.assert_allclose(std.apply(np.full(3, 20.0)), 0.0)


class TestPerPlayer:
    def test_careers_are_independent(self):
        ids = np.array(["a", "b", "a", "b", "a"])
        r = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
        out = quality.per_player_quality(ids, r, gamma=1.0, alpha=1.0)
        assert out[0] == 0.0 and out[1] == 0.0
        np.testing.assert_allclose(out[2], 1.0 / 2.0)
        np.testing.assert_allclose(out[3], -1.0 / 2.0)
        np.testing.assert_allclose(out[4], 2.0 / 3.0)

    def test_quality_table_export(self):
        rows = quality.quality_table(["a", "a", "b"], [0.0, 0.1, 0.0])
        assert rows[1] == {"player_id": "a", "attempt_index": 1, "quality": 0.1}
