"""Risk and return statistics of a fixed allocation.

All statistics come from exact enumeration of the joint outcome space: the
portfolio return of outcome i is ``r_i = sum_j f_j * k_ij`` and every
quantity below is a sum over outcomes, not a simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import OutcomeSpace, as_fractions, growth

#: Loss thresholds reported by default: 10% through 90% of capital.
DEFAULT_EXCEEDANCE_THRESHOLDS = tuple(t / 10.0 for t in range(1, 10))

#: Outcomes within this of the minimum return count as ties of the worst case.
_WORST_TIE_TOL = 1e-12


def portfolio_return_per_outcome(f, space: OutcomeSpace) -> tuple[np.ndarray, np.ndarray]:
    """Per-outcome probabilities and portfolio returns, aligned with the
    outcome order of ``space``. Returned as a pair of arrays because the
    outcome space can run to millions of rows."""
    arr = as_fractions(f, space.num_companies)
    return space.probabilities.copy(), space.returns @ arr


@dataclass(frozen=True)
class AllocationReport:
    """Statistics of one allocation.

    ``loss_exceedance`` rows are ``(threshold, probability)`` pairs meaning
    "probability of losing at least ``threshold`` of total capital"
    (``P(r <= -threshold)``), at the standard thresholds plus the worst
    outcome itself. ``worst_outcome`` is the minimum portfolio return and
    the total probability of the outcomes attaining it.
    """

    fractions: np.ndarray
    invested_total: float
    expected_arithmetic_gain: float
    expected_log_growth: float
    geometric_gain: float
    probability_of_loss: float
    loss_exceedance: tuple[tuple[float, float], ...]
    worst_outcome: tuple[float, float]


def compute_report(f, space: OutcomeSpace,
                   thresholds=DEFAULT_EXCEEDANCE_THRESHOLDS) -> AllocationReport:
    """Evaluate an allocation over the full outcome space.

    ``probability_of_loss`` counts strictly negative portfolio returns.
    ``geometric_gain`` is ``exp(G) - 1``, the per-round compounding rate
    implied by the expected log growth.
    """
    arr = as_fractions(f, space.num_companies)
    probs, rets = portfolio_return_per_outcome(arr, space)

    log_growth = growth(arr, space)
    worst_return = float(rets.min())
    tie_cut = worst_return + _WORST_TIE_TOL * max(1.0, abs(worst_return))
    worst_probability = float(probs[rets <= tie_cut].sum())

    rows = [(float(t), float(probs[rets <= -t].sum())) for t in thresholds]
    worst_depth = -worst_return
    if worst_return < 0.0 and all(
        abs(t - worst_depth) > _WORST_TIE_TOL for t, _ in rows
    ):
        rows.append((worst_depth, worst_probability))
    rows.sort()

    return AllocationReport(
        fractions=arr,
        invested_total=float(arr.sum()),
        expected_arithmetic_gain=float(probs @ rets),
        expected_log_growth=log_growth,
        geometric_gain=float(np.expm1(log_growth)),
        probability_of_loss=float(probs[rets < 0.0].sum()),
        loss_exceedance=tuple(rows),
        worst_outcome=(worst_return, worst_probability),
    )
