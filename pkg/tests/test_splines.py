import numpy as np
import pytest
from scipy.interpolate import BSpline

from fourthdown.splines import SplineError, SplineSpec, basis_matrix, spec_from_data


def scipy_basis(spec, x):
    """Independent reference basis via scipy's BSpline."""
    t = spec.knot_vector()
    x = np.clip(np.asarray(x, dtype=float), *spec.boundary_knots)
    return BSpline.design_matrix(x, t, spec.degree, extrapolate=False).toarray()


def test_df_counts_interior_knots():
    s4 = spec_from_data(np.linspace(0, 10, 50), df=4)
    s5 = spec_from_data(np.linspace(0, 10, 50), df=5)
    assert len(s4.interior_knots) == 0
    assert len(s5.interior_knots) == 1
    assert s4.n_basis == 4
    assert s5.n_basis == 5


def test_df_below_order_raises():
    with pytest.raises(SplineError):
        spec_from_data(np.linspace(0, 10, 50), df=3, degree=3)


def test_partition_of_unity_random_points():
    rng = np.random.default_rng(7)
    x = rng.uniform(1, 99, size=1000)
    spec = spec_from_data(x, df=5)
    b = basis_matrix(spec, x)
    assert np.all(b >= 0)
    np.testing.assert_allclose(b.sum(axis=1), 1.0, atol=1e-12)


def test_boundary_knot_activates_single_end_function():
    x = np.linspace(3, 47, 200)
    spec = spec_from_data(x, df=6)
    b = basis_matrix(spec, np.array([3.0, 47.0]))
    np.testing.assert_allclose(b[0, 0], 1.0, atol=1e-12)
    np.testing.assert_allclose(b[0, 1:], 0.0, atol=1e-12)
    np.testing.assert_allclose(b[1, -1], 1.0, atol=1e-12)
    np.testing.assert_allclose(b[1, :-1], 0.0, atol=1e-12)


@pytest.mark.parametrize("df,degree", [(4, 3), (5, 3), (6, 3), (3, 2), (7, 3)])
def test_matches_scipy_reference(df, degree):
    rng = np.random.default_rng(df * 100 + degree)
    x_train = rng.uniform(-2, 5, size=300)
    spec = spec_from_data(x_train, df=df, degree=degree)
    grid = np.linspace(-2, 5, 157)
    ours = basis_matrix(spec, grid)
    ref = scipy_basis(spec, grid)
    np.testing.assert_allclose(ours, ref, atol=1e-12)


def test_log_transforms():
    x = np.array([1, 2, 5, 10, 10, 10, 3, 7])
    spec = spec_from_data(x, df=4, input_transform="log1p")
    assert spec.boundary_knots == (np.log1p(1), np.log1p(10))
    b = basis_matrix(spec, x)
    np.testing.assert_allclose(b.sum(axis=1), 1.0, atol=1e-12)


def test_out_of_range_clamped():
    x = np.linspace(10, 20, 50)
    spec = spec_from_data(x, df=4)
    inside = basis_matrix(spec, np.array([20.0]))
    beyond = basis_matrix(spec, np.array([35.0]))
    np.testing.assert_allclose(inside, beyond)


def test_degenerate_input_padded_not_crashing():
    x = np.full(20, 7.0)
    spec = spec_from_data(x, df=4)
    b = basis_matrix(spec, x)
    np.testing.assert_allclose(b.sum(axis=1), 1.0, atol=1e-12)


def test_quantile_interior_knots_fall_back_when_discrete():
    # Heavily discrete input pushes quantiles onto the boundary.
    x = np.array([1.0] * 90 + [2.0] * 10)
    spec = spec_from_data(x, df=6)
    assert len(spec.interior_knots) == 2
    lo, hi = spec.boundary_knots
    assert all(lo < k < hi for k in spec.interior_knots)
