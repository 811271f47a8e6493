"""Indefinite LQ control and mean-square stabilization of discrete-time
Markov jump linear systems with multiplicative noise.

Layout:

* :mod:`mjlq.model` - problem data and validation
* :mod:`mjlq.numlin` - symmetric pseudo-inverse, PSD tests, operator radius
* :mod:`mjlq.riccati` - finite-horizon recursion, shifted fixed point,
  stationary solution and gains
* :mod:`mjlq.analysis` - feasible-set membership, exact observability,
  stability certificates
* :mod:`mjlq.simulate` - seeded Monte Carlo engine and exact oracles
* :mod:`mjlq.problemfile` / :mod:`mjlq.cli` - file format and command line
"""

from .model import CostWeights, InitialState, MjlsModel, ValidationReport, validate_model
from .riccati import (
    ConsistencyError,
    FiniteSolution,
    NgareDivergenceError,
    RiccatiStep,
    ShiftedWeights,
    StationarySolution,
    gdre_step,
    optimal_cost_finite,
    shifted_weights,
    solve_finite,
    solve_gare,
    solve_ngare,
    stationary_cost,
)
from .analysis import (
    ObservabilityReport,
    SetSReport,
    StabilityCertificate,
    check_set_S,
    exact_observability,
    maximality_check,
    ms_stability,
    region_scan,
)
from .simulate import (
    BruteForceResult,
    CostIdentityReport,
    SimConfig,
    SimulationReport,
    brute_force_finite,
    empirical_cost_identity,
    gains_from_finite,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "CostWeights", "InitialState", "MjlsModel", "ValidationReport", "validate_model",
    "ConsistencyError", "FiniteSolution", "NgareDivergenceError", "RiccatiStep",
    "ShiftedWeights", "StationarySolution", "gdre_step", "optimal_cost_finite",
    "shifted_weights", "solve_finite", "solve_gare", "solve_ngare", "stationary_cost",
    "ObservabilityReport", "SetSReport", "StabilityCertificate", "check_set_S",
    "exact_observability", "maximality_check", "ms_stability", "region_scan",
    "BruteForceResult", "CostIdentityReport", "SimConfig", "SimulationReport",
    "brute_force_finite", "empirical_cost_identity", "gains_from_finite", "simulate",
    "__version__",
]
