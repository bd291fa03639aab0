"""Optimal transport of scalar and vector measures on finite spaces."""

from .applications import (
    GameResult,
    GridFunction,
    MomentProblem,
    MomentResult,
    conjugate,
    game_value,
    game_value_restricted,
    inf_convolution,
    moment_feasible,
    trig_moment,
)
from .chain import (
    ChainProblem,
    ChainResult,
    chain_free_medium,
    chain_ot,
    reduced_cost,
    weighted_reduced_cost,
)
from .lp import LpProblem, LpSolution, NumericalBreakdown, solve, solve_vertex
from .measures import (
    FiniteSpace,
    Kernel,
    ScalarMeasure,
    SpaceMismatch,
    TransportPlan,
    VectorMeasure,
    disintegrate,
    grid_space,
    kernel_apply,
    kernel_compose,
    product,
    pushforward,
    variation,
)
from .scalar import (
    FeasibilityResult,
    GlueResult,
    InfeasibleTransport,
    OtResult,
    glue_feasible,
    local_constraint_feasible,
    solve_capacity,
    solve_capacity_min,
    solve_invariant,
    solve_multimarginal,
    solve_ot,
    solve_partial,
    strassen_feasible,
)
from .serialize import (
    ProblemFile,
    SchemaError,
    canonical_dumps,
    load,
    loads,
    parse_problem,
    save,
    to_jsonable,
)
from .generate import gen
from .golden import run_suite
from .vector import (
    DominanceCert,
    MapExtraction,
    MultiRangeOracle,
    VectorOtProblem,
    blackwell_check,
    dominates,
    dominates_n,
    dual_refinement_study,
    extract_map,
    feasible_range,
    martingale_polytope,
    multi_range,
    solve_vector_ot,
    strong_dominates,
)

__version__ = "0.1.0"
