"""Incremental gradient solvers for strongly convex finite sums, with the
numerical machinery to verify their convergence guarantees.

The package splits into problem containers (`problems`), index-selection
schemes (`samplers`), the solvers and run driver (`solvers`), persistence
(`data_io`), the analysis checks (`theory`), the sampling hardness floor
(`lower_bounds`), and a CLI (`cli`, console script `finito`).
"""

from .problems import (BigDataReport, FiniteSumProblem, LOGISTIC, LOSS_KINDS,
                       QuadraticProblem, ReferenceSolution, SQUARED,
                       StrongConvexityRequired, prox_operator)
from .samplers import (CYCLIC, IndexSampler, PERMUTED, SAMPLING_NAMES,
                       SamplingScheme, UNIFORM)
from .solvers import (DivergenceError, FinitoState, FullGradientState,
                      SagState, SolverConfig, SOLVER_TAGS, TraceRecord,
                      finito_first_pass_step, finito_init, finito_step,
                      miso_init, miso_step, prox_finito_step, reference_solve,
                      run, run_with_state, sag_default_step,
                      sag_first_pass_step, sag_init, sag_step)
from .data_io import (CheckpointFormatError, LibsvmFormatError, SynthSpec,
                      TRACE_HEADER, TraceFormatError, checkpoint_load,
                      checkpoint_save, parse_libsvm, read_trace, synth_problem,
                      write_trace)
from .theory import (CheckReport, LyapunovTerms, admissible_parameters,
                     big_data_lb_check, bound_gap_check, convexity_suite,
                     expected_decrease_check, expected_step_gap,
                     expected_term_shifts, finito_map, initial_lyapunov,
                     lyapunov_evaluate, pair_checks, random_audit_state,
                     rate_bound, rate_certificate, rate_curve, strong_lb_check,
                     t3_shift_closed_form, t4_shift_closed_form, table_checks,
                     table_mean_descent_check, update_displacement_gap,
                     variance_decomposition_gap)
from .lower_bounds import (CoupledWorstCase, UnseenPoint, UnseenSummary,
                           UnseenTrace, expected_unseen, first_pass_floor_trace,
                           floor_check, make_worst_case,
                           oracle_limited_suboptimality, simulate_unseen,
                           unseen_trajectory)

__version__ = "0.1.0"

__all__ = [
    "BigDataReport", "FiniteSumProblem", "LOGISTIC", "LOSS_KINDS",
    "QuadraticProblem", "ReferenceSolution", "SQUARED",
    "StrongConvexityRequired", "prox_operator",
    "CYCLIC", "IndexSampler", "PERMUTED", "SAMPLING_NAMES", "SamplingScheme",
    "UNIFORM",
    "DivergenceError", "FinitoState", "FullGradientState", "SagState",
    "SolverConfig", "SOLVER_TAGS", "TraceRecord", "finito_first_pass_step",
    "finito_init", "finito_step", "miso_init", "miso_step",
    "prox_finito_step", "reference_solve", "run", "run_with_state",
    "sag_default_step", "sag_first_pass_step", "sag_init", "sag_step",
    "CheckpointFormatError", "LibsvmFormatError", "SynthSpec", "TRACE_HEADER",
    "TraceFormatError", "checkpoint_load", "checkpoint_save", "parse_libsvm",
    "read_trace", "synth_problem", "write_trace",
    "CheckReport", "LyapunovTerms", "admissible_parameters",
    "big_data_lb_check", "bound_gap_check", "convexity_suite",
    "expected_decrease_check", "expected_step_gap", "expected_term_shifts",
    "finito_map", "initial_lyapunov", "lyapunov_evaluate", "pair_checks",
    "random_audit_state", "rate_bound", "rate_certificate", "rate_curve",
    "strong_lb_check", "t3_shift_closed_form", "t4_shift_closed_form",
    "table_checks", "table_mean_descent_check", "update_displacement_gap",
    "variance_decomposition_gap",
    "CoupledWorstCase", "UnseenPoint", "UnseenSummary", "UnseenTrace",
    "expected_unseen", "first_pass_floor_trace", "floor_check",
    "make_worst_case", "oracle_limited_suboptimality", "simulate_unseen",
    "unseen_trajectory",
    "__version__",
]
