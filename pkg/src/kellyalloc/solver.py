"""Constrained growth maximization by exhaustive active-set enumeration.

With ``N`` affine constraints there are ``2^N`` ways to split them into
active (holding with equality, carrying a multiplier) and inactive (strict
inequality, carrying a slack). For each split this module solves the
square nonlinear KKT system

    dG/df_j - sum_{l active} lambda_l * g_lj = 0        (stationarity)
    -(g_l . f + c_l + s_l) = 0                          (constraints)

with s_l = 0 for active and lambda_l = 0 for inactive constraints, using a
damped Newton iteration. Splits whose iteration fails to converge are simply
recorded as failed candidates; most splits are contradictory and that is
expected. The viable survivors are then filtered for feasibility and the
winner is picked by the selection rule: most companies funded first, then
highest expected one-round arithmetic value, then lowest mask integer.

Note the selection rule intentionally does not compare growth values or check
multiplier signs, so the winner is not always the growth maximum among the
viable candidates (a full-investment boundary point can beat the interior
growth optimum on expected value). Candidates expose enough state to audit
this; ``SolverConfig.require_dual_feasibility`` adds the multiplier-sign
check for diagnostic runs.

Mask convention: bit ``l`` of the mask integer is constraint ``l`` in the
constraint set's order, and bit value 1 means active.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .constraints import ConstraintSet, constraint_matrix
from .errors import EnumerationCapExceeded, NoViableSolution
from .model import OutcomeSpace

#: A candidate is feasible when no constraint value exceeds this.
FEASIBILITY_TOL = 1e-12

#: Refuse to enumerate more than 2^24 constraint combinations by default.
DEFAULT_ENUMERATION_CAP = 24

_FAILURE_REASONS = {
    _backend.STATUS_SINGULAR: "singular_jacobian",
    _backend.STATUS_MAX_ITERATIONS: "max_iterations",
    _backend.STATUS_DOMAIN: "domain_violation",
    _backend.STATUS_NONFINITE: "nonfinite_residual",
}


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the enumeration and the per-split Newton iteration.

    ``worker_count=None`` means use all available CPUs. ``step_damping``
    scales the first Newton step attempt; the step is then halved (up to
    ``max_step_halvings`` times) until the iterate stays inside the log
    domain.
    """

    tolerance: float = 1e-10
    max_iterations: int = 100
    step_damping: float = 1.0
    max_step_halvings: int = 30
    nonzero_threshold: float = 1e-6
    worker_count: int | None = None
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    require_dual_feasibility: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 < self.step_damping <= 1:
            raise ValueError("step_damping must lie in (0, 1]")
        if self.max_step_halvings < 0:
            raise ValueError("max_step_halvings must be non-negative")
        if self.nonzero_threshold < 0:
            raise ValueError("nonzero_threshold must be non-negative")
        if self.worker_count is not None and self.worker_count < 1:
            raise ValueError("worker_count must be at least 1")
        if self.enumeration_cap < 0:
            raise ValueError("enumeration_cap must be non-negative")

    def resolved_worker_count(self) -> int:
        if self.worker_count is not None:
            return self.worker_count
        return os.cpu_count() or 1


@dataclass(frozen=True)
class StatusMask:
    """Which constraints are active in one enumeration split."""

    bits: tuple[bool, ...]

    @classmethod
    def from_int(cls, value: int, num_constraints: int) -> StatusMask:
        if not 0 <= value < (1 << num_constraints):
            raise ValueError(f"mask {value} out of range for {num_constraints} constraints")
        return cls(bits=tuple(bool((value >> l) & 1) for l in range(num_constraints)))

    @property
    def as_int(self) -> int:
        return sum(1 << l for l, b in enumerate(self.bits) if b)

    @property
    def num_constraints(self) -> int:
        return len(self.bits)

    def is_active(self, l: int) -> bool:
        return self.bits[l]

    @property
    def active_indices(self) -> tuple[int, ...]:
        return tuple(l for l, b in enumerate(self.bits) if b)


@dataclass(frozen=True)
class CandidateSolution:
    """Outcome of the Newton iteration for one mask.

    For constraint ``l`` exactly one of ``multipliers[l]`` (active) and
    ``slacks[l]`` (inactive) can be nonzero. ``residual_norm`` is the last
    evaluated KKT residual infinity norm; when ``converged`` it is the norm
    at ``fractions``.
    """

    mask: StatusMask
    fractions: np.ndarray
    multipliers: np.ndarray
    slacks: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    failure_reason: str | None = None


def initial_point(space: OutcomeSpace, num_constraints: int, config: SolverConfig) -> np.ndarray:
    """Starting iterate: uniform fractions 1/N_c, multipliers/slacks at 0.1.

    The uniform point can sit on or past the log-domain boundary (for
    example when every company has a total-loss scenario, the all-down
    outcome has wealth factor 0 at 1/N_c each). The fractions are halved
    until every outcome keeps a positive wealth factor; slacks then start at
    ``max(-I(f0), 0.1)`` so inactive constraints begin consistent.
    """
    n_c = space.num_companies
    f0 = np.full(n_c, 1.0 / n_c)
    for _ in range(200):
        if np.all(1.0 + space.returns @ f0 > 0.0):
            break
        f0 *= 0.5
    x0 = np.full(n_c + num_constraints, 0.1)
    x0[:n_c] = f0
    return x0


def _active_array(mask: StatusMask) -> np.ndarray:
    return np.array(mask.bits, dtype=np.uint8)


def assemble_kkt_residual(f, multipliers, slacks, mask: StatusMask,
                          space: OutcomeSpace, constraints: ConstraintSet) -> np.ndarray:
    """KKT residual vector for auditing a candidate.

    Stationarity rows use only the active multipliers; constraint rows use
    only the inactive slacks (the split's own variables), regardless of what
    the full vectors carry elsewhere.
    """
    from .model import growth_gradient

    grads, offs = constraint_matrix(constraints, space)
    active = np.array(mask.bits, dtype=bool)
    f = np.asarray(f, dtype=float)
    lam = np.where(active, np.asarray(multipliers, dtype=float), 0.0)
    slack = np.where(active, 0.0, np.asarray(slacks, dtype=float))
    alpha = growth_gradient(f, space)
    if len(constraints):
        alpha = alpha - lam @ grads
        beta = -(grads @ f + offs + slack)
        return np.concatenate([alpha, beta])
    return alpha


def assemble_kkt_jacobian(f, mask: StatusMask, space: OutcomeSpace,
                          constraints: ConstraintSet) -> np.ndarray:
    """Jacobian of the KKT residual with respect to ``[f, y]`` where ``y_l``
    is the multiplier (active) or slack (inactive) of constraint ``l``."""
    from .model import growth_hessian

    n_c = space.num_companies
    n_l = len(constraints)
    jac = np.zeros((n_c + n_l, n_c + n_l))
    jac[:n_c, :n_c] = growth_hessian(f, space)
    if n_l:
        grads, _ = constraint_matrix(constraints, space)
        active = np.array(mask.bits, dtype=bool)
        jac[n_c:, :n_c] = -grads
        jac[:n_c, n_c:] = np.where(active[None, :], -grads.T, 0.0)
        idx = n_c + np.arange(n_l)
        jac[idx, idx] = np.where(active, 0.0, -1.0)
    return jac


def _candidate_from_raw(mask_value: int, n_l: int, x: np.ndarray, status: int,
                        iterations: int, resid: float, n_c: int) -> CandidateSolution:
    mask = StatusMask.from_int(mask_value, n_l)
    active = np.array(mask.bits, dtype=bool)
    y = x[n_c:]
    multipliers = np.where(active, y, 0.0)
    slacks = np.where(active, 0.0, y)
    converged = status == _backend.STATUS_OK
    return CandidateSolution(
        mask=mask,
        fractions=x[:n_c].copy(),
        multipliers=multipliers,
        slacks=slacks,
        converged=converged,
        iterations=iterations,
        residual_norm=float(resid),
        failure_reason=None if converged else _FAILURE_REASONS.get(status, "unknown"),
    )


def _solve_mask_block(backend_name, probs, rets, cons_grad, cons_off, x0,
                      lo, hi, tol, max_iter, step, max_halvings):
    """Solve a contiguous range of masks; runs in worker processes."""
    kern = _backend.kernels_for(backend_name)
    n_l = cons_off.shape[0]
    out = []
    for mask_value in range(lo, hi):
        active = np.array([(mask_value >> l) & 1 for l in range(n_l)], dtype=np.uint8)
        x, status, iterations, resid = kern.newton_kernel(
            probs, rets, cons_grad, cons_off, active, x0,
            tol, max_iter, step, max_halvings,
        )
        out.append((mask_value, x, status, iterations, resid))
    return out


def newton_solve(mask: StatusMask, space: OutcomeSpace, constraints: ConstraintSet,
                 config: SolverConfig = SolverConfig()) -> CandidateSolution:
    """Run the damped Newton iteration for a single mask.

    Never raises on numerical failure; inspect ``converged`` and
    ``failure_reason``. Most masks describe contradictory splits and are
    expected to fail or converge to infeasible points.
    """
    grads, offs = constraint_matrix(constraints, space)
    x0 = initial_point(space, len(constraints), config)
    kern = _backend.kernels()
    x, status, iterations, resid = kern.newton_kernel(
        space.probabilities, space.returns, grads, offs,
        _active_array(mask), x0,
        config.tolerance, config.max_iterations,
        config.step_damping, config.max_step_halvings,
    )
    return _candidate_from_raw(mask.as_int, len(constraints), np.asarray(x), status,
                               iterations, resid, space.num_companies)


def solve_all(space: OutcomeSpace, constraints: ConstraintSet,
              config: SolverConfig = SolverConfig()) -> list[CandidateSolution]:
    """Solve every one of the ``2^N`` active/inactive splits.

    Results come back ordered by mask integer regardless of how many worker
    processes ran, so output is reproducible byte for byte across
    ``worker_count`` settings.

    Raises
    ------
    EnumerationCapExceeded
        When ``N`` exceeds ``config.enumeration_cap``.
    """
    n_l = len(constraints)
    if n_l > config.enumeration_cap:
        raise EnumerationCapExceeded(
            f"{n_l} constraints would need 2^{n_l} = {1 << n_l} systems; "
            f"the cap is 2^{config.enumeration_cap}"
        )
    total = 1 << n_l
    grads, offs = constraint_matrix(constraints, space)
    x0 = initial_point(space, n_l, config)
    backend_name = _backend.backend_name()
    args = (backend_name, space.probabilities, space.returns, grads, offs, x0)
    solve_args = (config.tolerance, config.max_iterations,
                  config.step_damping, config.max_step_halvings)

    workers = config.resolved_worker_count()
    raw: list[tuple] = []
    if workers > 1 and total > 1:
        bounds = np.linspace(0, total, min(total, workers * 4) + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_solve_mask_block, *args, int(lo), int(hi), *solve_args)
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                raw.extend(fut.result())
    else:
        raw = _solve_mask_block(*args, 0, total, *solve_args)

    n_c = space.num_companies
    return [
        _candidate_from_raw(mask_value, n_l, np.asarray(x), status, iterations, resid, n_c)
        for mask_value, x, status, iterations, resid in raw
    ]


def filter_viable(candidates, space: OutcomeSpace, constraints: ConstraintSet,
                  config: SolverConfig = SolverConfig()) -> list[CandidateSolution]:
    """Keep candidates that converged to a genuinely usable point.

    Viability means: converged; every inactive slack strictly positive; all
    constraint values within ``FEASIBILITY_TOL`` of feasible; the fractions
    inside the log-growth domain. With ``require_dual_feasibility`` set,
    active multipliers must also be non-negative (within the same tolerance).

    Raises
    ------
    NoViableSolution
        When nothing survives.
    """
    candidates = list(candidates)
    grads, offs = constraint_matrix(constraints, space)
    viable = []
    for cand in candidates:
        if not cand.converged:
            continue
        active = np.array(cand.mask.bits, dtype=bool)
        inactive = ~active
        if np.any(cand.slacks[inactive] <= 0.0):
            continue
        if len(constraints) and np.max(grads @ cand.fractions + offs) > FEASIBILITY_TOL:
            continue
        if np.any(1.0 + space.returns @ cand.fractions <= 0.0):
            continue
        if config.require_dual_feasibility and np.any(cand.multipliers[active] < -FEASIBILITY_TOL):
            continue
        viable.append(cand)
    if not viable:
        total = len(candidates)
        converged = sum(1 for c in candidates if c.converged)
        raise NoViableSolution(
            f"no viable allocation: {converged} of {total} systems converged, "
            "none passed the viability checks"
        )
    return viable


def expected_value(fractions: np.ndarray, space: OutcomeSpace) -> float:
    """Expected one-round arithmetic value ``1 + sum_j f_j E[k_j]``."""
    mean_returns = space.probabilities @ space.returns
    return float(1.0 + fractions @ mean_returns)


def select_solution(viable, space: OutcomeSpace,
                    config: SolverConfig = SolverConfig()) -> CandidateSolution:
    """Pick the winner among viable candidates.

    Preference order: most companies funded above ``nonzero_threshold``,
    then highest expected arithmetic value, then lowest mask integer.
    """
    viable = list(viable)
    if not viable:
        raise NoViableSolution("no viable candidates to select from")

    def sort_key(cand: CandidateSolution):
        funded = int(np.sum(cand.fractions > config.nonzero_threshold))
        return (-funded, -expected_value(cand.fractions, space), cand.mask.as_int)

    return min(viable, key=sort_key)
