import numpy as np
import pytest

from fourthdown import transitions
from fourthdown.boosting import GbtParams
from fourthdown.engine import FitConfig, fit_decision_model
from fourthdown.oracle import SyntheticWorld, ValueTable, simulate_history

# Small but fully wired configuration used across integration-style tests.
SMALL_FIT = FitConfig(
    wp_params=GbtParams(max_depth=3, learning_rate=0.15, n_rounds=60, min_child_weight=5.0),
    synthetic_miss_count=200,
)


def synthetic_transition_pools(seed=0, n_punt=600, n_fg=500, n_conv=800):
    """Random pools with known, sensible structure for fitting a bundle."""
    rng = np.random.default_rng(seed)
    punt_yard = rng.integers(31, 100, n_punt).astype(float)
    punt_pq = rng.normal(size=n_punt)
    punt_next = np.minimum(80.0, 100 - punt_yard + 40 + 3 * punt_pq + rng.normal(0, 5, n_punt))
    fg_yard = rng.integers(1, 51, n_fg).astype(float)
    fg_kq = rng.normal(size=n_fg)
    fg_eta = 5.0 - 0.11 * fg_yard + 0.4 * fg_kq
    fg_made = (rng.uniform(size=n_fg) < 1 / (1 + np.exp(-fg_eta))).astype(float)
    conv_down = rng.choice([3.0, 4.0], n_conv)
    conv_z = rng.integers(1, 16, n_conv).astype(float)
    conv_yard = np.maximum(conv_z, rng.integers(1, 100, n_conv)).astype(float)
    conv_tq = rng.normal(size=n_conv)
    p = 1 / (1 + np.exp(-(1.2 - 0.22 * conv_z + 0.3 * conv_tq)))
    converted = rng.uniform(size=n_conv) < p
    gain = np.where(converted, conv_z + rng.poisson(3, n_conv), np.maximum(conv_z - 1 - rng.poisson(2, n_conv), 0))
    gain = np.where(converted, gain, np.minimum(gain, conv_z - 1))
    return {
        "punt": {"yardline": punt_yard, "pq": punt_pq, "next_yardline": punt_next},
        "fg": {"yardline": fg_yard, "kq": fg_kq, "made": fg_made},
        "conversion": {
            "down": conv_down, "ydstogo": conv_z, "yardline": conv_yard,
            "delta_tq": conv_tq, "yards_gained": gain.astype(float),
        },
    }


@pytest.fixture(scope="session")
def tiny_bundle():
    pools = synthetic_transition_pools()
    return transitions.fit_transition_bundle(
        pools["punt"], pools["fg"], pools["conversion"],
        synthetic_misses={"count": 300, "seed": 1},
    )


@pytest.fixture(scope="session")
def small_world():
    return SyntheticWorld()


@pytest.fixture(scope="session")
def small_table(small_world):
    return ValueTable(small_world)


@pytest.fixture(scope="session")
def sim_plays(small_world):
    return simulate_history(small_world, 150, seed=77)


@pytest.fixture(scope="session")
def sim_model(sim_plays):
    return fit_decision_model(sim_plays, config=SMALL_FIT)
