"""Command-line entry point.

Reads a YAML portfolio, builds the constraint set from policy flags, runs
the full enumeration, and renders the selected allocation either as a human
readable text report or as structured JSON for downstream tooling.

The structured output is deliberately free of timing and parallelism
details, so runs of the same input with different ``--workers`` settings are
byte-identical; wall time goes to stderr instead.

Exit codes:

====  =====================================================
 0    success
 2    usage or policy errors (bad flags, bad combinations)
 3    unreadable or malformed portfolio document
 4    portfolio fails validation (probabilities, downside, ...)
 5    no viable allocation found
 6    too many constraints to enumerate
 7    joint outcome space above the cap
====  =====================================================
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

from . import _backend
from .constraints import AllocationPolicy, ConstraintSet, build_constraint_set
from .errors import (
    EnumerationCapExceeded,
    InvalidPolicy,
    NoViableSolution,
    OutcomeExplosion,
    ParseError,
    ValidationError,
)
from .model import DEFAULT_OUTCOME_CAP, OutcomeSpace, enumerate_outcomes
from .portfolio_io import parse_portfolio
from .solver import (
    CandidateSolution,
    SolverConfig,
    filter_viable,
    select_solution,
    solve_all,
)
from .stats import DEFAULT_EXCEEDANCE_THRESHOLDS, AllocationReport, compute_report

_EXIT_CODES = (
    (ParseError, 3),
    (ValidationError, 4),
    (NoViableSolution, 5),
    (EnumerationCapExceeded, 6),
    (OutcomeExplosion, 7),
)


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs."""

    input_path: str
    policy: AllocationPolicy = AllocationPolicy()
    allow_no_downside: bool = False
    solver: SolverConfig = SolverConfig()
    output_format: str = "text"
    out_path: str | None = None
    exceedance_thresholds: tuple[float, ...] = DEFAULT_EXCEEDANCE_THRESHOLDS
    max_outcomes: int = DEFAULT_OUTCOME_CAP


@dataclass(frozen=True)
class RunMetadata:
    """Solver diagnostics for one run."""

    outcome_count: int
    constraint_count: int
    systems_attempted: int
    systems_converged: int
    viable_count: int
    selected_mask: int
    selected_active: tuple[str, ...]
    iterations: int
    residual_norm: float
    backend: str
    wall_time_seconds: float


@dataclass(frozen=True)
class PipelineResult:
    company_names: tuple[str, ...]
    policy: AllocationPolicy
    constraints: ConstraintSet
    space: OutcomeSpace = field(repr=False)
    selected: CandidateSolution
    report: AllocationReport
    metadata: RunMetadata


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Parse, enumerate, solve, select, and report."""
    started = time.perf_counter()
    try:
        with open(config.input_path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read portfolio file: {exc}") from None

    companies = parse_portfolio(text, allow_no_downside=config.allow_no_downside)
    space = enumerate_outcomes(companies, max_outcomes=config.max_outcomes)
    constraints = build_constraint_set(config.policy, companies)

    candidates = solve_all(space, constraints, config.solver)
    viable = filter_viable(candidates, space, constraints, config.solver)
    selected = select_solution(viable, space, config.solver)
    report = compute_report(selected.fractions, space, config.exceedance_thresholds)

    metadata = RunMetadata(
        outcome_count=space.num_outcomes,
        constraint_count=len(constraints),
        systems_attempted=len(candidates),
        systems_converged=sum(1 for c in candidates if c.converged),
        viable_count=len(viable),
        selected_mask=selected.mask.as_int,
        selected_active=tuple(constraints.labels()[l] for l in selected.mask.active_indices),
        iterations=selected.iterations,
        residual_norm=selected.residual_norm,
        backend=_backend.backend_name(),
        wall_time_seconds=time.perf_counter() - started,
    )
    return PipelineResult(
        company_names=tuple(c.name for c in companies),
        policy=config.policy,
        constraints=constraints,
        space=space,
        selected=selected,
        report=report,
        metadata=metadata,
    )


def _describe_policy(policy: AllocationPolicy) -> str:
    if policy.is_unconstrained():
        return "unconstrained"
    parts = []
    if policy.long_only:
        parts.append("long-only")
    if policy.max_leverage is not None:
        parts.append(f"max leverage {policy.max_leverage:g}")
    if policy.max_allocation is not None:
        parts.append(f"max allocation {policy.max_allocation * 100:.2f}%")
    if policy.max_loss is not None:
        p, k = policy.max_loss
        parts.append(f"max loss {p * 100:g}% chance of {abs(k) * 100:g}%")
    return ", ".join(parts)


def render_text(result: PipelineResult) -> str:
    """Human-readable report."""
    report = result.report
    meta = result.metadata
    lines = []
    lines.append(f"Portfolio: {len(result.company_names)} companies, "
                 f"{meta.outcome_count} joint outcomes")
    lines.append(f"Policy: {_describe_policy(result.policy)}")
    lines.append("")
    lines.append("Allocation (fraction of total capital):")
    width = max(len("total"), *(len(name) for name in result.company_names))
    for name, fraction in zip(result.company_names, report.fractions):
        lines.append(f"  {name:<{width}}  {fraction * 100:10.2f}%")
    lines.append(f"  {'total':<{width}}  {report.invested_total * 100:10.2f}%")
    lines.append("")
    lines.append(f"Expected arithmetic gain:  {report.expected_arithmetic_gain:.6f} per unit of capital")
    lines.append(f"Expected log growth:       {report.expected_log_growth:.6f}")
    lines.append(f"Geometric growth rate:     {report.geometric_gain * 100:.2f}% per round")
    lines.append(f"Probability of any loss:   {report.probability_of_loss * 100:.2f}%")
    lines.append("")
    lines.append("Loss exceedance (chance of losing at least t of capital):")
    rows = [(t, p) for t, p in report.loss_exceedance if p > 0.0]
    if rows:
        for threshold, probability in rows:
            lines.append(f"  t = {threshold * 100:6.2f}%:  {probability * 100:.4f}%")
    else:
        lines.append("  (none: no outcome loses capital)")
    worst_return, worst_probability = report.worst_outcome
    lines.append(f"Worst outcome: {worst_return * 100:.2f}% of capital "
                 f"with probability {worst_probability * 100:.4f}%")
    lines.append("")
    lines.append(f"Solver: {meta.systems_attempted} systems attempted, "
                 f"{meta.systems_converged} converged, {meta.viable_count} viable "
                 f"({meta.constraint_count} constraints, backend {meta.backend})")
    active = ", ".join(meta.selected_active) if meta.selected_active else "none"
    lines.append(f"Selected active constraints: {active}")
    lines.append(f"KKT residual {meta.residual_norm:.3e} after {meta.iterations} iterations; "
                 f"wall time {meta.wall_time_seconds:.3f} s")
    return "\n".join(lines) + "\n"


def render_structured(result: PipelineResult) -> str:
    """Deterministic JSON report (no timing or worker-count fields)."""
    report = result.report
    meta = result.metadata
    policy = result.policy
    doc = {
        "format": "kellyalloc-report",
        "version": 1,
        "policy": {
            "long_only": policy.long_only,
            "max_leverage": policy.max_leverage,
            "max_allocation": policy.max_allocation,
            "max_loss": list(policy.max_loss) if policy.max_loss else None,
        },
        "companies": list(result.company_names),
        "allocation": {
            "fractions": [float(x) for x in report.fractions],
            "invested_total": report.invested_total,
        },
        "statistics": {
            "expected_arithmetic_gain": report.expected_arithmetic_gain,
            "expected_log_growth": report.expected_log_growth,
            "geometric_gain": report.geometric_gain,
            "probability_of_loss": report.probability_of_loss,
            "loss_exceedance": [
                {"threshold": t, "probability": p} for t, p in report.loss_exceedance
            ],
            "worst_outcome": {
                "return": report.worst_outcome[0],
                "probability": report.worst_outcome[1],
            },
        },
        "solver": {
            "backend": meta.backend,
            "outcome_count": meta.outcome_count,
            "constraint_count": meta.constraint_count,
            "constraints": list(result.constraints.labels()),
            "systems_attempted": meta.systems_attempted,
            "systems_converged": meta.systems_converged,
            "viable_count": meta.viable_count,
            "selected_mask": meta.selected_mask,
            "selected_active": list(meta.selected_active),
            "iterations": meta.iterations,
            "kkt_residual": meta.residual_norm,
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def _parse_thresholds(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None
    if not values or any(not 0.0 < t <= 1.0 for t in values):
        raise argparse.ArgumentTypeError("thresholds must lie in (0, 1]")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kellyalloc",
        description="Growth-optimal capital allocation over scenario-valued companies.",
        epilog="Exit codes: 0 ok, 2 usage, 3 parse, 4 validation, "
               "5 no viable allocation, 6 enumeration cap, 7 outcome cap.",
    )
    parser.add_argument("portfolio", help="YAML portfolio file")

    policy = parser.add_argument_group("policy")
    policy.add_argument("--unconstrained", action="store_true",
                        help="drop every constraint, including long-only")
    policy.add_argument("--max-leverage", type=float, metavar="L",
                        help="cap total invested fraction at 1 + L")
    policy.add_argument("--max-allocation", type=float, metavar="M",
                        help="cap each company's fraction at M")
    policy.add_argument("--max-loss", nargs=2, type=float, metavar=("P", "K"),
                        help="accept probability P of losing fraction K "
                             "(K negative, e.g. --max-loss 0.05 -0.5)")
    policy.add_argument("--allow-no-downside", action="store_true",
                        help="accept companies with no scenario below market cap")

    solver = parser.add_argument_group("solver")
    solver.add_argument("--tolerance", type=float, default=SolverConfig.tolerance,
                        help="Newton convergence tolerance (default %(default)g)")
    solver.add_argument("--max-iterations", type=int, default=SolverConfig.max_iterations,
                        help="Newton iteration cap per system (default %(default)s)")
    solver.add_argument("--workers", type=int, default=None, metavar="N",
                        help="worker processes (default: all CPUs)")
    solver.add_argument("--enumeration-cap", type=int, default=SolverConfig.enumeration_cap,
                        help="refuse more than 2^N constraint systems (default %(default)s)")
    solver.add_argument("--max-outcomes", type=int, default=DEFAULT_OUTCOME_CAP,
                        help="cap on joint outcomes (default %(default)s)")

    output = parser.add_argument_group("output")
    output.add_argument("--format", choices=("text", "structured"), default="text",
                        help="report format (default %(default)s)")
    output.add_argument("--out", metavar="PATH",
                        help="write the report to PATH instead of stdout")
    output.add_argument("--exceedance-thresholds", type=_parse_thresholds,
                        metavar="T1,T2,...",
                        help="comma-separated loss thresholds in (0, 1] "
                             "(default 0.1 through 0.9)")
    return parser


def _config_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    policy_flags = (args.max_leverage is not None or args.max_allocation is not None
                    or args.max_loss is not None)
    if args.unconstrained and policy_flags:
        parser.error("--unconstrained cannot be combined with other policy flags")
    policy = AllocationPolicy(
        long_only=not args.unconstrained,
        max_leverage=args.max_leverage,
        max_allocation=args.max_allocation,
        max_loss=tuple(args.max_loss) if args.max_loss is not None else None,
    )
    try:
        solver = SolverConfig(
            tolerance=args.tolerance,
            max_iterations=args.max_iterations,
            worker_count=args.workers,
            enumeration_cap=args.enumeration_cap,
        )
    except ValueError as exc:
        parser.error(str(exc))
    return RunConfig(
        input_path=args.portfolio,
        policy=policy,
        allow_no_downside=args.allow_no_downside,
        solver=solver,
        output_format=args.format,
        out_path=args.out,
        exceedance_thresholds=args.exceedance_thresholds or DEFAULT_EXCEEDANCE_THRESHOLDS,
        max_outcomes=args.max_outcomes,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _config_from_args(args, parser)

    try:
        result = run_pipeline(config)
    except InvalidPolicy as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except tuple(exc for exc, _ in _EXIT_CODES) as exc:
        for exc_type, code in _EXIT_CODES:
            if isinstance(exc, exc_type):
                print(f"error: {exc}", file=sys.stderr)
                return code
        raise  # unreachable

    if config.output_format == "structured":
        rendered = render_structured(result)
        print(f"wall time {result.metadata.wall_time_seconds:.3f} s "
              f"(backend {result.metadata.backend})", file=sys.stderr)
    else:
        rendered = render_text(result)

    if config.out_path:
        with open(config.out_path, "w", encoding="utf-8") as handle:
            handle.write(rendered)
    else:
        sys.stdout.write(rendered)
    return 0


if __name__ == "__main__":
    sys.exit(main())
