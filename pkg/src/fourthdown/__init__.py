"""Fourth-down decision engine with bootstrap uncertainty quantification."""

__version__ = "0.1.0"

from .boosting import GbtModel, GbtParams
from .bootstrap import BootstrapEnsemble, ResamplePlan, boot_pct, fit_ensemble
from .engine import (
    DecisionModel,
    DecisionValues,
    FitConfig,
    FourthDownState,
    evaluate,
    fit_decision_model,
)
from .ingest import PlayRecord, filter_training_pools, make_split, parse_plays
from .oracle import SyntheticWorld, ValueTable, simulate_history
from .transitions import TransitionBundle

__all__ = [
    "BootstrapEnsemble",
    "DecisionModel",
    "DecisionValues",
    "FitConfig",
    "FourthDownState",
    "GbtModel",
    "GbtParams",
    "PlayRecord",
    "ResamplePlan",
    "SyntheticWorld",
    "TransitionBundle",
    "ValueTable",
    "boot_pct",
    "evaluate",
    "filter_training_pools",
    "fit_decision_model",
    "fit_ensemble",
    "make_split",
    "parse_plays",
    "simulate_history",
    "__version__",
]
