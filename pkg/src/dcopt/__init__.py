"""Difference-of-convex optimization for sparse least squares.

Solvers (pDCA with FISTA-style extrapolation and restarts, plain pDCA, GIST),
five DC regularizers, a seeded instance generator, invariant diagnostics, and
a benchmark driver with a CLI.
"""

from .bench import (
    BenchmarkPlan,
    CellRow,
    CellStats,
    InvariantViolation,
    ResultTable,
    RunRecord,
    nontiming_fingerprint,
    parse_plan,
    render_table,
    replicate_seed,
    run_benchmark,
)
from .diagnostics import DescentReport, check_descent, merit_E, stationarity_residual
from .instances import (
    ProblemInstance,
    SmoothEval,
    generate_instance,
    l12_lambda_bound,
    load_instance,
    objective,
    save_instance,
    smooth_eval,
)
from .linalg import (
    LmaxResult,
    RandomSource,
    combine_seed,
    gauss_vector,
    lmax_gram,
    matvec,
    matvec_t,
    mix64,
)
from .regularizers import (
    MCP,
    SCAD,
    L1MinusL2,
    LogPenalty,
    ProxResult,
    RegularizerSpec,
    TransformedL1,
    full_prox,
    make_spec,
    p1_prox,
    p1_weight,
    p2_lipschitz,
    p2_subgrad,
    parse_reg,
    parse_reg_family,
    prox_objective,
    prox_oracle,
    reg_value,
    soft_threshold,
)
from .solvers import (
    ExtrapolationState,
    GistParams,
    SolveResult,
    SolverConfig,
    gist_solve,
    next_beta,
    pdca_e_solve,
    solve,
)

__all__ = [
    "BenchmarkPlan",
    "CellRow",
    "CellStats",
    "DescentReport",
    "ExtrapolationState",
    "GistParams",
    "InvariantViolation",
    "L1MinusL2",
    "LmaxResult",
    "LogPenalty",
    "MCP",
    "ProblemInstance",
    "ProxResult",
    "RandomSource",
    "RegularizerSpec",
    "ResultTable",
    "RunRecord",
    "SCAD",
    "SmoothEval",
    "SolveResult",
    "SolverConfig",
    "TransformedL1",
    "check_descent",
    "combine_seed",
    "full_prox",
    "gauss_vector",
    "generate_instance",
    "gist_solve",
    "l12_lambda_bound",
    "lmax_gram",
    "load_instance",
    "make_spec",
    "matvec",
    "matvec_t",
    "merit_E",
    "mix64",
    "next_beta",
    "nontiming_fingerprint",
    "objective",
    "p1_prox",
    "p1_weight",
    "p2_lipschitz",
    "p2_subgrad",
    "parse_plan",
    "parse_reg",
    "parse_reg_family",
    "pdca_e_solve",
    "prox_objective",
    "prox_oracle",
    "reg_value",
    "render_table",
    "replicate_seed",
    "run_benchmark",
    "save_instance",
    "smooth_eval",
    "soft_threshold",
    "solve",
    "stationarity_residual",
    "version",
]

version = "0.1.0"
