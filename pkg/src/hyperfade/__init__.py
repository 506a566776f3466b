"""Hyper-Rayleigh analysis of IRS-assisted links over IPL-faded hops."""

from .cascade import CascadePair, make_pair
from .errors import DomainError, MomentDivergenceError, NonConvergenceError
from .harness import ExperimentConfig, run_curves, validate_approx
from .hrr import HrrMetrics, Regime, classify, metrics
from .ipl import IplParams, make_ipl
from .irs_link import GammaApprox, IrsLinkModel, gamma_approx
from .solver import SolveResult, Target, solve_pair, theorem5

__all__ = [
    "CascadePair", "DomainError", "ExperimentConfig", "GammaApprox", "HrrMetrics",
    "IplParams", "IrsLinkModel", "MomentDivergenceError", "NonConvergenceError", "Regime",
    "SolveResult", "Target", "classify", "gamma_approx", "make_ipl", "make_pair", "metrics",
    "run_curves", "solve_pair", "theorem5", "validate_approx",
]
