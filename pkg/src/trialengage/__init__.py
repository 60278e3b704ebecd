"""Estimation of treatment effects when trial participation itself affects outcomes.

Simulation, identification checks on intervened graphs, estimators for the
usual-care and trial-context average treatment effects, assumption
diagnostics, and a scenario-driven Monte Carlo verifier.
"""

from ._kernels import BACKEND
from .data import CompositeDataset
from .diagnostics import (ExchangeabilityReport, InteractionScan,
                          PositivityReport, ScaleClassification,
                          dual_scale_check, exchangeability_mean_check,
                          interaction_scan, positivity_report)
from .errors import (ConvergenceError, EstimationError, PositivityError,
                     ValidationError)
from .estimators import (BootstrapCI, EstimateReport, METHODS, bootstrap_ci,
                         estimate, estimate_ipw_all,
                         estimate_ipw_nonparticipants, estimate_om_all,
                         estimate_om_nonparticipants, estimate_relative_scale,
                         estimate_trialctx_all, point_estimator)
from .glm import DesignSpec, GlmFit, fit_linear, fit_logistic, predict
from .graphs import (CANONICAL_CLAIMS, CausalGraph, ClaimReport, Edge,
                     InterventionSet, Node, SwigGraph, build_canonical_graphs,
                     d_separated, swig_transform, target_population_dag,
                     verify_independence_claims)
from .scm import (BUILTIN_SPECS, ConditionReport, PotentialOutcomeDataset,
                  ScmSpec, TrueEstimands, VBlock, check_conditions,
                  derive_seed, generate, naive_usual_care_contrast,
                  to_composite, true_estimands, unit_uniforms)
from .verifier import (ScenarioSpec, VerificationReport, builtin_scenario,
                       builtin_scenarios, run_scenario, summarize)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BUILTIN_SPECS",
    "CANONICAL_CLAIMS",
    "METHODS",
    "BootstrapCI",
    "CausalGraph",
    "ClaimReport",
    "CompositeDataset",
    "ConditionReport",
    "ConvergenceError",
    "DesignSpec",
    "Edge",
    "EstimateReport",
    "EstimationError",
    "ExchangeabilityReport",
    "GlmFit",
    "InteractionScan",
    "InterventionSet",
    "Node",
    "PositivityError",
    "PositivityReport",
    "PotentialOutcomeDataset",
    "ScaleClassification",
    "ScenarioSpec",
    "ScmSpec",
    "SwigGraph",
    "TrueEstimands",
    "VBlock",
    "ValidationError",
    "VerificationReport",
    "bootstrap_ci",
    "build_canonical_graphs",
    "builtin_scenario",
    "builtin_scenarios",
    "check_conditions",
    "d_separated",
    "derive_seed",
    "dual_scale_check",
    "estimate",
    "estimate_ipw_all",
    "estimate_ipw_nonparticipants",
    "estimate_om_all",
    "estimate_om_nonparticipants",
    "estimate_relative_scale",
    "estimate_trialctx_all",
    "exchangeability_mean_check",
    "fit_linear",
    "fit_logistic",
    "generate",
    "interaction_scan",
    "naive_usual_care_contrast",
    "point_estimator",
    "positivity_report",
    "predict",
    "run_scenario",
    "summarize",
    "swig_transform",
    "target_population_dag",
    "to_composite",
    "true_estimands",
    "unit_uniforms",
    "verify_independence_claims",
]
