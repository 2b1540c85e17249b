"""Zero-sum Dynkin stopping games on one-dimensional diffusions.

Pipeline: classify payoff-ordering regions, build the ordered associated game,
solve its double obstacle problem for the value and stopping sets, construct
randomized (epsilon-)equilibrium strategies, and verify them by Monte Carlo
simulation and PDE best-response analysis.
"""

from .associated import AssociatedPayoffs, build_associated_payoffs
from .calibrate import EpsilonCalibration, calibrate_epsilon_strategies
from .errors import (CalibrationFailure, ClassificationConflict, DegenerateInterval,
                     DynkinError, HypothesisViolated, KinkEvaluation, NonContraction,
                     NonConvergence, NotAKink, ObstacleCrossing, OrderingViolation,
                     SimulationPrecondition, ValidationError)
from .model import (B1, B2, B3, B4, B5, B6, DiffusionSpec, PayoffTriple,
                    RegionPartition, apply_generator, classify_regions, kink_jump,
                    make_grid)
from .piecewise import PiecewiseFn, as_piecewise
from .problem import Problem, ProblemConfig, build_problem
from .simulate import (SimParams, SimulationReport, approx_local_time,
                       choose_t_max, estimate_deviation_gain, run_game,
                       simulate_paths)
from .solver import (ValueSolution, brute_force_oracle, extract_stop_sets,
                     solve_value, verify_martingale_conditions)
from .strategy import (RandomizedStrategy, build_nash_strategies,
                       check_simplified_condition, exit_interval)
from .verify import (BestResponseSolution, PureNeVerdict, best_response_value,
                     check_pure_ne_nonexistence, check_pure_ne_sufficient,
                     pure_ne_verdict)

__version__ = "0.1.0"

__all__ = [
    "AssociatedPayoffs", "build_associated_payoffs",
    "B1", "B2", "B3", "B4", "B5", "B6",
    "DiffusionSpec", "PayoffTriple", "RegionPartition",
    "apply_generator", "classify_regions", "kink_jump", "make_grid",
    "PiecewiseFn", "as_piecewise",
    "Problem", "ProblemConfig", "build_problem",
    "ValueSolution", "brute_force_oracle", "extract_stop_sets",
    "solve_value", "verify_martingale_conditions",
    "RandomizedStrategy", "build_nash_strategies", "check_simplified_condition",
    "exit_interval",
    "EpsilonCalibration", "calibrate_epsilon_strategies",
    "SimParams", "SimulationReport", "approx_local_time", "choose_t_max",
    "estimate_deviation_gain", "run_game", "simulate_paths",
    "BestResponseSolution", "PureNeVerdict", "best_response_value",
    "check_pure_ne_nonexistence", "check_pure_ne_sufficient", "pure_ne_verdict",
    "DynkinError", "ValidationError", "ClassificationConflict", "KinkEvaluation",
    "NotAKink", "OrderingViolation", "ObstacleCrossing", "NonConvergence",
    "NonContraction", "HypothesisViolated", "DegenerateInterval",
    "CalibrationFailure", "SimulationPrecondition",
    "__version__",
]
