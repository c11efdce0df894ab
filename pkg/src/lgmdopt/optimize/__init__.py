"""Black-box maximisers: DE, self-adaptive DE, GP Bayesian optimisation and random search."""

from .bo import AcqKind, AcquisitionConfig, acquire, bo_step
from .campaign import CampaignResult, Method, bo_initial_design, default_np, run_campaign
from .de import DeConfig, Individual, Strategy, de_crossover, de_donor, de_select
from .gp import GpModel, gp_fit, matern52
from .sade import SadeState, sade_sample_rates, sade_update_probabilities

__all__ = [
    "AcqKind", "AcquisitionConfig", "acquire", "bo_step",
    "CampaignResult", "Method", "bo_initial_design", "default_np", "run_campaign",
    "DeConfig", "Individual", "Strategy", "de_crossover", "de_donor", "de_select",
    "GpModel", "gp_fit", "matern52",
    "SadeState", "sade_sample_rates", "sade_update_probabilities",
]
