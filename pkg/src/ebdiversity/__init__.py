"""Empirical-Bayes estimation of community composition from overdispersed counts."""

__version__ = "0.1.0"

from .indices import Index, euclidean_similarity, pma, shannon, simpson
from .model import (
    CompositionEstimate,
    CountVector,
    EtaSolution,
    EtaSolverOptions,
    Method,
    SolverStatus,
    eb_proportions,
    estimate_eta,
    log_lik_gradient,
    log_lik_hessian,
    marginal_log_likelihood,
    mle_proportions,
    prior_marginal_variance,
)
from .simulation import ProfileKind, Scenario, make_profile, run_scenario
