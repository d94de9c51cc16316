"""Operator splitting with spatial discretization and rational time stepping."""

from .analysis import (
    ConsistencyReport,
    ConvergenceReport,
    ProblemFamily,
    StabilityReport,
    advection_diffusion_family,
    chernoff_consistency,
    convergence_study,
    diffusion_family,
    diffusion_reaction_family,
    order_estimate,
    stability_scan,
    transport_family,
    trotter_kato_check,
)
from .oracle import ExactSolution, exact_solution, expm
from .rational import (
    EXACT,
    PartialFraction,
    RationalFunction,
    apply,
    backward_euler,
    catalog,
    check_consistency,
    check_lhp_admissible,
    crank_nicolson,
    evaluate,
    iterated_resolvent,
    parse_scheme,
    partial_fractions,
)
from .spatial import (
    ContinuousFunction,
    DiscreteOperator,
    GridSpace,
    ProjectionPair,
    build_operator,
    check_projection_axioms,
    function_from_expression,
    make_grid_space,
    sin_mode,
)
from .splitting import SplitProblem, SplitScheme, evolve, exact_split, step

__version__ = "0.1.0"
