"""Numerical laboratory for undiscounted strategic experimentation with two-armed Levy bandits.

N players continuously split one unit of effort between a safe arm with known
flow payoff s and a common risky arm whose payoff process is a Levy process
(drift + Brownian noise + compound Poisson jumps with finitely many atom
sizes) governed by an unknown state.  Under the strong long-run average
criterion the unique symmetric Markov perfect equilibrium has a closed form
in the current belief.  This package computes that equilibrium, simulates
belief and payoff dynamics, and verifies the equilibrium, learning-rate and
regularity claims numerically.
"""

from .model import (
    LevyModel,
    ModelValidationError,
    make_model,
    model_from_dict,
    load_model,
    save_model,
    full_belief,
    clip_renormalize,
    state_means,
    mean_payoff,
    full_info_payoff,
    incentive,
    simplex_grid,
)
from .equilibrium import (
    BestResponse,
    action_from_incentive,
    equilibrium_action,
    hjb_maximand,
    best_response_set,
    Strategy,
    ClosedFormEquilibrium,
    ConstantStrategy,
    OffsetStrategy,
    ThresholdStrategy,
    TabulatedStrategy,
    is_reasonable,
    lipschitz_estimate,
)
from .filtering import (
    GeneratorStencil,
    ScaledGenerator,
    jump_update,
    belief_drift,
    belief_diffusion,
    generator_stencil,
    apply_generator,
    learning_rates,
    LogOddsDiagnostics,
)
from .conjugate import (
    NormalStat,
    GammaStat,
    normal_full_info_payoff,
    normal_incentive,
    normal_update,
    gamma_full_info_payoff,
    gamma_incentive,
    gamma_update,
    conjugate_equilibrium_action,
    incentive_slope_inverse,
)
from .montecarlo import (
    SimConfig,
    RunSpec,
    PathEnsemble,
    LraEstimate,
    ConvergenceReport,
    DeviationReport,
    simulate,
    estimate_lra_payoff,
    convergence_diagnostics,
    unilateral_deviation_value,
)
from .hjb import (
    ValueField,
    build_value_field,
    hjb_residual,
    hjb_residual_report,
    vertex_boundary_check,
)

__version__ = "0.1.0"
