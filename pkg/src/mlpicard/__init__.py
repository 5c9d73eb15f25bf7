"""Multilevel Picard Monte Carlo solver for semilinear parabolic PDEs.

Estimates solutions of terminal-value problems of the form

    du/dt + <mu(x), grad u> + 1/2 tr(sigma sigma^T Hess u) + f(t, x, u) = 0,
    u(T, x) = g(x),

via their stochastic fixed-point representation, using full-history
recursive multilevel Monte Carlo over hierarchical deterministic random
streams with forward paths discretized on a uniform grid.
"""

from .bounds import (
    BoundParams,
    error_bound,
    gronwall_discrete,
    gronwall_mlp,
    lyapunov_phi,
    perturbation_bound,
    total_cost_bound,
)
from .euler import EulerConfig, PathResult, lyapunov_check, simulate, update_times
from .mlp import CostTally, Estimate, MlpParams, cost_recursion_bound, estimate
from .problems import CATALOGUE, Problem, ProblemId, instantiate, validate
from .rng import RNG_ALGORITHM, RandomStream, ThetaIndex, child, stream_for

__version__ = "0.1.0"

__all__ = [
    "BoundParams",
    "CATALOGUE",
    "CostTally",
    "Estimate",
    "EulerConfig",
    "MlpParams",
    "PathResult",
    "Problem",
    "ProblemId",
    "RNG_ALGORITHM",
    "RandomStream",
    "ThetaIndex",
    "child",
    "cost_recursion_bound",
    "error_bound",
    "estimate",
    "gronwall_discrete",
    "gronwall_mlp",
    "instantiate",
    "lyapunov_check",
    "lyapunov_phi",
    "perturbation_bound",
    "simulate",
    "stream_for",
    "total_cost_bound",
    "update_times",
    "validate",
]
