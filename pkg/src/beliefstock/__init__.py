"""Inventory control with partially observed Markov-modulated demand."""

from .assumptions import (A1Report, check_a1, check_a1_exact, check_a2, check_a3, check_a4,
                          construct_xhat, min_delta)
from .belief import check_belief, lambda_update, reachable_beliefs, sigma, sigma_marginal, unit_belief
from .bounds import (GapReport, delta_gap, informativeness, lower_bound_vL, shift_model,
                     tighter_lower_vprime, upper_bound_vU)
from .errors import (AssumptionError, BeliefError, BeliefStockError, ImpossibleObservation, LPError,
                     ModelError, ResourceLimitError)
from .gamma import GammaSet, gamma_initial, gamma_step, prune, solve_finite, solve_infinite, value_full
from .lp import LPResult, solve_lp
from .model import CostParams, ModelSpec, build_factored, bundled_model, derive_variant, load_model
from .regions import Inequality, Region
from .reorder import SSBounds, SSPolicy, k_convexity_check, solve_ss_finite, ss_bounds, ss_partition
from .simulate import MyopicPolicy, SSRule, simulate_policy
from .single_period import (FacetCoefficients, expected_cost_L, facet_coefficients, myopic_base_stock,
                            partition_p1)

__version__ = "0.1.0"
