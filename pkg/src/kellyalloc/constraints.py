"""Affine allocation constraints.

Every constraint is expressed as ``I(f) = g . f + c <= 0`` so the solver can
treat them uniformly:

===================  =======================  =====================
kind                 gradient ``g``           offset ``c``
===================  =======================  =====================
long_only[j]         ``-e_j``                 ``0``
max_leverage (L)     ``(1, ..., 1)``          ``-(1 + L)``
max_allocation[j]    ``+e_j``                 ``-M``
max_loss (P, K)      ``-w``                   ``P * K``
===================  =======================  =====================

where ``w_j`` is company j's worst scenario weight: the minimum of
``probability * return`` over its scenarios. The max-loss constraint bounds
the probability-weighted single-scenario loss: with acceptable probability P
of losing fraction K of capital (K in (-1, 0)), it requires
``sum_j f_j w_j >= P * K``. It only makes sense for non-negative fractions,
so it demands a long-only constraint on every company.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidPolicy
from .model import Company, OutcomeSpace, as_fractions


class ConstraintKind(Enum):
    LONG_ONLY = "long_only"
    MAX_LEVERAGE = "max_leverage"
    MAX_ALLOCATION = "max_allocation"
    MAX_LOSS = "max_loss"


def _check_finite(value, what: str) -> float:
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise InvalidPolicy(f"{what} must be a finite number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class ConstraintSpec:
    """One constraint. Use the factory helpers below rather than building
    these by hand; they fill in exactly the fields each kind needs."""

    kind: ConstraintKind
    company_index: int | None = None
    limit: float | None = None
    loss_probability: float | None = None
    loss_return: float | None = None

    def __post_init__(self):
        kind = self.kind
        if kind in (ConstraintKind.LONG_ONLY, ConstraintKind.MAX_ALLOCATION):
            if not isinstance(self.company_index, int) or self.company_index < 0:
                raise InvalidPolicy(f"{kind.value} needs a non-negative company index")
        elif self.company_index is not None:
            raise InvalidPolicy(f"{kind.value} does not take a company index")
        if kind == ConstraintKind.MAX_LEVERAGE:
            limit = _check_finite(self.limit, "max leverage L")
            if limit < 0:
                raise InvalidPolicy(f"max leverage L must be >= 0, got {limit}")
        elif kind == ConstraintKind.MAX_ALLOCATION:
            limit = _check_finite(self.limit, "max allocation M")
            if not (0.0 < limit <= 1.0):
                raise InvalidPolicy(f"max allocation M must lie in (0, 1], got {limit}")
        elif self.limit is not None:
            raise InvalidPolicy(f"{kind.value} does not take a limit")
        if kind == ConstraintKind.MAX_LOSS:
            p = _check_finite(self.loss_probability, "max loss probability P")
            if not (0.0 < p <= 1.0):
                raise InvalidPolicy(f"max loss probability P must lie in (0, 1], got {p}")
            k = _check_finite(self.loss_return, "max loss return K")
            if not (-1.0 < k < 0.0):
                raise InvalidPolicy(f"max loss return K must lie in (-1, 0), got {k}")
        elif self.loss_probability is not None or self.loss_return is not None:
            raise InvalidPolicy(f"{kind.value} does not take loss parameters")

    @property
    def label(self) -> str:
        if self.company_index is not None:
            return f"{self.kind.value}[{self.company_index}]"
        return self.kind.value


def long_only(company_index: int) -> ConstraintSpec:
    """``f_j >= 0``."""
    return ConstraintSpec(ConstraintKind.LONG_ONLY, company_index=company_index)


def max_leverage(limit: float) -> ConstraintSpec:
    """``sum_j f_j <= 1 + L``; L = 0 forbids leverage outright."""
    return ConstraintSpec(ConstraintKind.MAX_LEVERAGE, limit=limit)


def max_allocation(company_index: int, limit: float) -> ConstraintSpec:
    """``f_j <= M`` for one company."""
    return ConstraintSpec(ConstraintKind.MAX_ALLOCATION, company_index=company_index, limit=limit)


def max_loss(loss_probability: float, loss_return: float) -> ConstraintSpec:
    """Probability-weighted single-scenario loss bound ``sum_j f_j w_j >= P * K``.

    ``loss_return`` K is the acceptable loss expressed as a negative return,
    e.g. P=0.05, K=-0.5 reads "a 5% chance of losing half the capital".
    """
    return ConstraintSpec(
        ConstraintKind.MAX_LOSS, loss_probability=loss_probability, loss_return=loss_return
    )


def worst_scenario_weight(space: OutcomeSpace, company_index: int) -> float:
    """``w_j``: minimum of probability * return over company j's scenarios."""
    probs = space.scenario_probabilities[company_index]
    rets = space.scenario_returns[company_index]
    return float(np.min(probs * rets))


def constraint_gradient(spec: ConstraintSpec, space: OutcomeSpace) -> np.ndarray:
    """The constant gradient ``g`` of ``I(f) = g . f + c``."""
    n_c = space.num_companies
    kind = spec.kind
    if kind == ConstraintKind.LONG_ONLY:
        g = np.zeros(n_c)
        g[spec.company_index] = -1.0
        return g
    if kind == ConstraintKind.MAX_LEVERAGE:
        return np.ones(n_c)
    if kind == ConstraintKind.MAX_ALLOCATION:
        g = np.zeros(n_c)
        g[spec.company_index] = 1.0
        return g
    return np.array([-worst_scenario_weight(space, j) for j in range(n_c)])


def constraint_offset(spec: ConstraintSpec, space: OutcomeSpace) -> float:
    """The constant offset ``c`` of ``I(f) = g . f + c``."""
    kind = spec.kind
    if kind == ConstraintKind.LONG_ONLY:
        return 0.0
    if kind == ConstraintKind.MAX_LEVERAGE:
        return -(1.0 + spec.limit)
    if kind == ConstraintKind.MAX_ALLOCATION:
        return -spec.limit
    return spec.loss_probability * spec.loss_return


def constraint_value(spec: ConstraintSpec, f, space: OutcomeSpace) -> float:
    """``I(f) = g . f + c``; feasible iff <= 0.

    >>> import numpy as np
    >>> from .model import Company, Scenario, enumerate_outcomes
    >>> c = Company("demo", 100.0, (Scenario("down", 50.0, 0.5), Scenario("up", 200.0, 0.5)))
    >>> space = enumerate_outcomes([c])
    >>> constraint_value(max_leverage(0.0), [0.8], space)
    -0.19999999999999996
    """
    arr = as_fractions(f, space.num_companies)
    return float(constraint_gradient(spec, space) @ arr + constraint_offset(spec, space))


@dataclass(frozen=True)
class ConstraintSet:
    """An ordered, validated collection of constraints for one portfolio."""

    specs: tuple[ConstraintSpec, ...]
    num_companies: int

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        if self.num_companies < 1:
            raise InvalidPolicy("constraint set needs at least one company")
        long_only_seen = set()
        leverage_count = 0
        loss_count = 0
        for spec in self.specs:
            if spec.company_index is not None and spec.company_index >= self.num_companies:
                raise InvalidPolicy(
                    f"constraint {spec.label} refers to company {spec.company_index}, "
                    f"but the portfolio has {self.num_companies}"
                )
            if spec.kind == ConstraintKind.LONG_ONLY:
                if spec.company_index in long_only_seen:
                    raise InvalidPolicy(f"duplicate {spec.label}")
                long_only_seen.add(spec.company_index)
            elif spec.kind == ConstraintKind.MAX_LEVERAGE:
                leverage_count += 1
            elif spec.kind == ConstraintKind.MAX_LOSS:
                loss_count += 1
        if leverage_count > 1:
            raise InvalidPolicy("at most one max_leverage constraint is allowed")
        if loss_count > 1:
            raise InvalidPolicy("at most one max_loss constraint is allowed")
        if loss_count and long_only_seen != set(range(self.num_companies)):
            raise InvalidPolicy(
                "max_loss requires a long_only constraint on every company; "
                "its worst-scenario weights assume non-negative fractions"
            )

    def __len__(self) -> int:
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    def labels(self) -> tuple[str, ...]:
        return tuple(spec.label for spec in self.specs)


@dataclass(frozen=True)
class AllocationPolicy:
    """User-facing run options, turned into a ConstraintSet per portfolio.

    ``max_loss`` is a ``(P, K)`` pair; see :func:`max_loss`.
    """

    long_only: bool = True
    max_leverage: float | None = None
    max_allocation: float | None = None
    max_loss: tuple[float, float] | None = None

    def is_unconstrained(self) -> bool:
        return not self.long_only and self.max_leverage is None \
            and self.max_allocation is None and self.max_loss is None


def build_constraint_set(policy: AllocationPolicy, companies) -> ConstraintSet:
    """Expand a policy into ordered constraints.

    Order: long-only per company (ascending), allocation caps per company
    (ascending), leverage cap, loss cap. Status masks and reports index
    constraints in this order.
    """
    companies = list(companies)
    for c in companies:
        if not isinstance(c, Company):
            raise InvalidPolicy("policies apply to Company instances")
    n_c = len(companies)
    specs: list[ConstraintSpec] = []
    if policy.long_only:
        specs.extend(long_only(j) for j in range(n_c))
    if policy.max_allocation is not None:
        specs.extend(max_allocation(j, policy.max_allocation) for j in range(n_c))
    if policy.max_leverage is not None:
        specs.append(max_leverage(policy.max_leverage))
    if policy.max_loss is not None:
        if not policy.long_only:
            raise InvalidPolicy("max_loss requires long_only")
        p, k = policy.max_loss
        specs.append(max_loss(p, k))
    return ConstraintSet(specs=tuple(specs), num_companies=n_c)


def constraint_matrix(cset: ConstraintSet, space: OutcomeSpace) -> tuple[np.ndarray, np.ndarray]:
    """Stack all gradients and offsets: returns ``(G, c)`` with
    ``I(f) = G @ f + c`` elementwise."""
    n_l = len(cset)
    grads = np.zeros((n_l, space.num_companies))
    offs = np.zeros(n_l)
    for l, spec in enumerate(cset):
        grads[l] = constraint_gradient(spec, space)
        offs[l] = constraint_offset(spec, space)
    return grads, offs


def max_violation(cset: ConstraintSet, f, space: OutcomeSpace) -> float:
    """Largest constraint value; <= 0 (within tolerance) means feasible."""
    if not len(cset):
        return float("-inf")
    grads, offs = constraint_matrix(cset, space)
    arr = as_fractions(f, space.num_companies)
    return float(np.max(grads @ arr + offs))
