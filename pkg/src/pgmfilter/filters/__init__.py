"""PGM filter variants and baseline nonlinear filters."""

from .estimators import (
    FILTER_KINDS,
    EnKFilter,
    GMUKFilter,
    PGMFilter,
    RecursiveFilter,
    SIRFilter,
    UKFilter,
    make_filter,
)
from .kalman import (
    TABLE_I_PARAMS,
    MeasurementStats,
    UnscentedParams,
    gm_ukf_step,
    kalman_component_update,
    mode_weight_update,
    particle_stats,
    ukf_predict,
    ukf_step,
    ukf_update,
    unscented_stats,
)
from .particle import (
    effective_sample_size,
    enkf_step,
    importance_weights,
    sir_step,
    systematic_resample,
)
from .pgm import PGMConfig, PGMStepInfo, pgm_predict, pgm_step, pgm_update

__all__ = [
    "FILTER_KINDS",
    "EnKFilter",
    "GMUKFilter",
    "MeasurementStats",
    "PGMConfig",
    "PGMFilter",
    "PGMStepInfo",
    "RecursiveFilter",
    "SIRFilter",
    "TABLE_I_PARAMS",
    "UKFilter",
    "UnscentedParams",
    "effective_sample_size",
    "enkf_step",
    "gm_ukf_step",
    "importance_weights",
    "kalman_component_update",
    "make_filter",
    "mode_weight_update",
    "particle_stats",
    "pgm_predict",
    "pgm_step",
    "pgm_update",
    "sir_step",
    "systematic_resample",
    "ukf_predict",
    "ukf_step",
    "ukf_update",
    "unscented_stats",
]
