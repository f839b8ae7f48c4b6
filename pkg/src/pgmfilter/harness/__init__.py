"""Monte Carlo experiment harness: configs, campaigns, outputs, demos and CLI."""

from .campaign import CampaignResult, FilterSummary, child_rng, make_truth, replay, run_campaign, run_single
from .config import ExperimentConfig, FilterSpec, load_config, parse_config, shipped_config
from .demos import demo_bimodal, demo_particle_depletion
from .outputs import SUMMARY_COLUMNS, emit_outputs

__all__ = [
    "CampaignResult",
    "ExperimentConfig",
    "FilterSpec",
    "FilterSummary",
    "SUMMARY_COLUMNS",
    "child_rng",
    "demo_bimodal",
    "demo_particle_depletion",
    "emit_outputs",
    "load_config",
    "make_truth",
    "parse_config",
    "replay",
    "run_campaign",
    "run_single",
    "shipped_config",
]
