"""Worst-case optimal stopping on finite hyper-graphs.

Frontier solvers for the maximal fixed point of the stopping operator,
controller synthesis with adversarial simulation, grid reach-avoid
scenario construction, and a plan/goal recognition mission monitor.
"""

from .core import (InvalidInstanceError, PredIndex, ProblemInstance,
                   ValidationReport, build_pred_index, load_instance,
                   save_instance, validate)
from .solver import (ConvergenceError, FmaxTable, PrematureConvergenceError,
                     SolveStats, apply_dp_operator, fmax_pred, q_value,
                     solve_baseline, solve_modified, solve_oracle)
from .synthesis import (ClosedLoopTrace, Controller, brute_force_optimal_cost,
                        brute_force_values, extract_controller,
                        simulate_closed_loop)
from .abstraction import (Box, CellGraph, GridSpec, Scenario,
                          build_reach_avoid, discretize, load_scenario,
                          make_scenario_suite)
from .pgrm import (Hypothesis, MissionResult, MonitorState, ObservationModel,
                   SolvedSuite, TimelineEvent, generate_hypotheses,
                   in_output_set, monitor_step, predict_sequence, recognize,
                   run_mission)

__version__ = "0.1.0"

__all__ = [
    "ProblemInstance", "PredIndex", "ValidationReport", "InvalidInstanceError",
    "validate", "build_pred_index", "load_instance", "save_instance",
    "SolveStats", "FmaxTable", "ConvergenceError", "PrematureConvergenceError",
    "q_value", "apply_dp_operator", "solve_oracle", "solve_baseline",
    "solve_modified", "fmax_pred",
    "Controller", "ClosedLoopTrace", "extract_controller",
    "simulate_closed_loop", "brute_force_values", "brute_force_optimal_cost",
    "Box", "Scenario", "GridSpec", "CellGraph", "load_scenario", "discretize",
    "build_reach_avoid", "make_scenario_suite",
    "ObservationModel", "Hypothesis", "MonitorState", "TimelineEvent",
    "SolvedSuite", "MissionResult", "in_output_set", "generate_hypotheses",
    "monitor_step", "recognize", "predict_sequence", "run_mission",
    "__version__",
]
