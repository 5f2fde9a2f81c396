"""Growth-optimal capital allocation over scenario-valued companies.

Model a portfolio as companies with probability-weighted intrinsic-value
scenarios, enumerate the joint outcome space, and find the fraction of
capital per company that maximizes expected logarithmic growth subject to
long-only, leverage, per-company allocation, and maximum-loss constraints.
The constrained optimum is found exactly by enumerating every active/inactive
split of the constraints and solving each split's KKT system with a damped
Newton iteration.

Quick start::

    from kellyalloc import (AllocationPolicy, SolverConfig, build_constraint_set,
                            enumerate_outcomes, filter_viable, select_solution,
                            solve_all, compute_report)
    from kellyalloc.portfolio_io import parse_portfolio

    companies = parse_portfolio(open("portfolio.yaml").read())
    space = enumerate_outcomes(companies)
    constraints = build_constraint_set(AllocationPolicy(max_leverage=0.0), companies)
    config = SolverConfig()
    chosen = select_solution(
        filter_viable(solve_all(space, constraints, config), space, constraints, config),
        space, config)
    print(compute_report(chosen.fractions, space))
"""

from ._backend import available_backends, backend_name, select_backend
from .constraints import (
    AllocationPolicy,
    ConstraintKind,
    ConstraintSet,
    ConstraintSpec,
    build_constraint_set,
    constraint_gradient,
    constraint_offset,
    constraint_value,
    long_only,
    max_allocation,
    max_leverage,
    max_loss,
    max_violation,
    worst_scenario_weight,
)
from .errors import (
    DomainViolation,
    EnumerationCapExceeded,
    GridTooLarge,
    InvalidPolicy,
    KellyAllocError,
    NoViableSolution,
    OutcomeExplosion,
    ParseError,
    ValidationError,
)
from .model import (
    Company,
    OutcomeSpace,
    Scenario,
    enumerate_outcomes,
    growth,
    growth_gradient,
    growth_hessian,
    scenario_return,
    wealth_factors,
)
from .oracle import GridSpec, analytic_kelly_single, brute_force_maximize, monte_carlo_growth
from .portfolio_io import parse_amount, parse_portfolio, serialize_portfolio
from .solver import (
    CandidateSolution,
    SolverConfig,
    StatusMask,
    assemble_kkt_jacobian,
    assemble_kkt_residual,
    expected_value,
    filter_viable,
    newton_solve,
    select_solution,
    solve_all,
)
from .stats import AllocationReport, compute_report, portfolio_return_per_outcome

__version__ = "0.1.0"

__all__ = [
    "AllocationPolicy",
    "AllocationReport",
    "CandidateSolution",
    "Company",
    "ConstraintKind",
    "ConstraintSet",
    "ConstraintSpec",
    "DomainViolation",
    "EnumerationCapExceeded",
    "GridSpec",
    "GridTooLarge",
    "InvalidPolicy",
    "KellyAllocError",
    "NoViableSolution",
    "OutcomeExplosion",
    "OutcomeSpace",
    "ParseError",
    "Scenario",
    "SolverConfig",
    "StatusMask",
    "ValidationError",
    "analytic_kelly_single",
    "assemble_kkt_jacobian",
    "assemble_kkt_residual",
    "available_backends",
    "backend_name",
    "brute_force_maximize",
    "build_constraint_set",
    "compute_report",
    "constraint_gradient",
    "constraint_offset",
    "constraint_value",
    "enumerate_outcomes",
    "expected_value",
    "filter_viable",
    "growth",
    "growth_gradient",
    "growth_hessian",
    "long_only",
    "max_allocation",
    "max_leverage",
    "max_loss",
    "max_violation",
    "monte_carlo_growth",
    "newton_solve",
    "parse_amount",
    "parse_portfolio",
    "portfolio_return_per_outcome",
    "scenario_return",
    "select_backend",
    "select_solution",
    "serialize_portfolio",
    "solve_all",
    "wealth_factors",
    "worst_scenario_weight",
]
