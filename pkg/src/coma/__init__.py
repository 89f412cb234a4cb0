"""Merging conformal prediction sets: static voting rules, risk-control merging,
and online weight learning (COMA) with adaptive conformal levels."""

from .config import SimConfig, build_config
from .conformal import Dataset, PredictorSpec, SplitConformalModel, lasso_path, split_conformal
from .errors import ComaError, ConfigError, ContractViolation, DataError, UnboundedMeasure
from .intervals import (
    EMPTY,
    FULL_LINE,
    CoverageProfile,
    IntervalSet,
    WeightVector,
    coverage_profile,
    measure,
    normalize,
    superlevel,
)
from .merge import (
    BoundedLoss,
    binomial_quantile,
    independent_merge,
    majority_vote,
    optimize_weights,
    randomized_majority_vote,
    risk_merge,
)
from .online import (
    AciState,
    HedgeState,
    LossTransform,
    QuantileTrackerState,
    aci_update,
    coma_round,
    hedge_init,
    hedge_update,
    hedge_weights,
    local_coverage,
    quantile_track_update,
    regret_bound,
)
from .sims import SimReport

__version__ = "0.1.0"
