"""B-spline basis construction for the regression designs.

The basis is the full (partition-of-unity) B-spline basis over a clamped
knot vector, so ``df`` equals the number of basis functions and satisfies
``df = degree + 1 + n_interior_knots``. Inputs outside the boundary knots
are clamped before evaluation; cubic extrapolation is never performed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRANSFORMS = {
    "identity": lambda x: np.asarray(x, dtype=float),
    "log1p": lambda x: np.log1p(np.asarray(x, dtype=float)),
    "log": lambda x: np.log(np.asarray(x, dtype=float)),
}

# Minimum spread between boundary knots. Degenerate training inputs (a
# single distinct value) get a synthetic half-unit pad on each side so the
# basis stays well defined; the resulting constant block is handled by the
# collinearity drop in the GLM fitters.
_MIN_RANGE = 1e-8
_DEGENERATE_PAD = 0.5


class SplineError(ValueError):
    pass


@dataclass(frozen=True)
class SplineSpec:
    """Knot layout and degree for one B-spline block."""

    df: int
    degree: int = 3
    input_transform: str = "identity"
    interior_knots: tuple[float, ...] = ()
    boundary_knots: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.input_transform not in TRANSFORMS:
            raise SplineError(f"unknown input transform {self.input_transform!r}")
        if self.df < self.degree + 1:
            raise SplineError(
                f"df={self.df} needs at least {self.degree + 1 - self.df} interior "
                f"knots below zero: df < degree + 1 with zero interior knots"
            )
        if len(self.interior_knots) != self.df - self.degree - 1:
            raise SplineError(
                f"df={self.df}, degree={self.degree} requires exactly "
                f"{self.df - self.degree - 1} interior knots, got {len(self.interior_knots)}"
            )
        lo, hi = self.boundary_knots
        if not lo < hi:
            raise SplineError("boundary knots must be strictly increasing")
        inner = np.asarray(self.interior_knots, dtype=float)
        if inner.size and (np.any(np.diff(inner) < 0) or inner.min() <= lo or inner.max() >= hi):
            raise SplineError("interior knots must be nondecreasing and strictly inside the boundary")

    @property
    def n_basis(self) -> int:
        return self.df

    def knot_vector(self) -> np.ndarray:
        lo, hi = self.boundary_knots
        return np.concatenate([
            np.full(self.degree + 1, lo),
            np.asarray(self.interior_knots, dtype=float),
            np.full(self.degree + 1, hi),
        ])

    def transform(self, x) -> np.ndarray:
        return TRANSFORMS[self.input_transform](x)


def spec_from_data(x, df: int, degree: int = 3, input_transform: str = "identity") -> SplineSpec:
    """Place knots from training data: boundary at min/max of the transformed
    input, interior knots at equally spaced quantiles."""
    xt = TRANSFORMS[input_transform](x)
    xt = xt[np.isfinite(xt)]
    if xt.size == 0:
        raise SplineError("no finite values to place knots from")
    lo, hi = float(xt.min()), float(xt.max())
    if hi - lo < _MIN_RANGE:
        lo, hi = lo - _DEGENERATE_PAD, hi + _DEGENERATE_PAD
    n_inner = df - degree - 1
    if n_inner < 0:
        raise SplineError(
            f"df={df} is infeasible for degree={degree}: df < degree + 1 with zero interior knots"
        )
    if n_inner > 0:
        qs = np.arange(1, n_inner + 1) / (n_inner + 1)
        inner = np.quantile(xt, qs)
        # Discrete inputs can push quantiles onto the boundary; fall back to
        # equally spaced interior knots so the count (and hence df) is kept.
        if (
            np.any(inner <= lo)
            or np.any(inner >= hi)
            or np.any(np.diff(inner) <= 0 if n_inner > 1 else [False])
        ):
            inner = lo + (hi - lo) * qs
        inner_t = tuple(float(v) for v in inner)
    else:
        inner_t = ()
    return SplineSpec(
        df=df,
        degree=degree,
        input_transform=input_transform,
        interior_knots=inner_t,
        boundary_knots=(lo, hi),
    )


def basis_matrix(spec: SplineSpec, x) -> np.ndarray:
    """Evaluate the basis on raw inputs, returning an (n, df) design block.

    Inputs are transformed then clamped to the boundary knots.
    """
    xt = spec.transform(x)
    lo, hi = spec.boundary_knots
    xt = np.clip(np.atleast_1d(xt).astype(float), lo, hi)
    t = spec.knot_vector()
    deg = spec.degree
    n = xt.shape[0]
    n_spans = len(t) - 1

    # Cox-de Boor recursion, vectorized over observations.
    b = np.zeros((n, n_spans))
    for i in range(n_spans):
        if t[i] < t[i + 1]:
            b[:, i] = (xt >= t[i]) & (xt < t[i + 1])
    # Right boundary belongs to the last nonempty span.
    last = np.max(np.nonzero(t < hi)[0])
    b[xt == hi, last] = 1.0

    for k in range(1, deg + 1):
        for i in range(n_spans - k):
            left = 0.0
            if t[i + k] > t[i]:
                left = (xt - t[i]) / (t[i + k] - t[i]) * b[:, i]
            right = 0.0
            if t[i + k + 1] > t[i + 1]:
                right = (t[i + k + 1] - xt) / (t[i + k + 1] - t[i + 1]) * b[:, i + 1]
            b[:, i] = left + right
    return b[:, : spec.n_basis]
