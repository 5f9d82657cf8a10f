"""Payoff-perturbed gradient and regret dynamics for two-player zero-sum games."""

from .games import (InvalidInputError, MatrixGame, StrategyProfile, as_simplex_point,
                    best_response_value_x, best_response_value_y, nash_conv,
                    perturbed_landscape, project_simplex, spectral_norm, uniform)
from .perturbation import (ConvergenceError, EquilibriumResult, Mode, PerturbationConfig,
                           PreconditionError, UnsupportedSizeError, critical_mu_exact,
                           critical_mu_x, critical_mu_y, exact_minimax, exact_minimax_rational,
                           invariance_threshold, mu_sweep, solve_perturbed)
from .gda import (Algorithm, NumericalError, SolverConfig, Trajectory, anchor_index,
                  check_step_size, random_profile, run_solver)
from .efg import (X, Y, ExtensiveGame, GameDefinitionError, MissingInfosetError,
                  best_response, build_kuhn_poker, expected_value, nash_conv_efg)
from .cfr import CfrConfig, CfrState, Variant, cfr_iteration, regret_matching_plus, run_cfr
from .experiments import ExperimentSpec, parse_matrix, registry_lookup, run_experiment

__version__ = "0.1.0"
