"""Independent cross-checks for the solver.

Nothing here shares code with the Newton/KKT path: the grid search evaluates
growth directly over a lattice, the single-asset formula is closed form, and
the Monte Carlo estimate samples outcomes. They exist so tests can corroborate
the solver with methods that fail differently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintKind, ConstraintSet, constraint_matrix
from .errors import GridTooLarge, NoViableSolution
from .model import OutcomeSpace
from .solver import FEASIBILITY_TOL

#: Refuse grids with more points than this.
GRID_POINT_CAP = 100_000_000

#: Grid search is only meant for small cross-check instances.
MAX_GRID_COMPANIES = 4


@dataclass(frozen=True)
class GridSpec:
    """Lattice for the brute-force search.

    ``bounds`` is one ``(low, high)`` pair per company; ``None`` derives
    ``[0, 1 + L]`` from the constraint set's leverage cap (L = 0 when there
    is none).
    """

    resolution: float = 0.01
    bounds: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        res = float(self.resolution)
        if not (math.isfinite(res) and res > 0):
            raise ValueError("grid resolution must be positive")
        if self.bounds is not None:
            for lo, hi in self.bounds:
                if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                    raise ValueError(f"invalid grid bounds ({lo}, {hi})")


def _axes(grid: GridSpec, constraints: ConstraintSet, n_c: int) -> list[np.ndarray]:
    bounds = grid.bounds
    if bounds is None:
        leverage = 0.0
        for spec in constraints:
            if spec.kind == ConstraintKind.MAX_LEVERAGE:
                leverage = spec.limit
        bounds = tuple((0.0, 1.0 + leverage) for _ in range(n_c))
    if len(bounds) != n_c:
        raise ValueError(f"expected {n_c} bound pairs, got {len(bounds)}")
    res = float(grid.resolution)
    counts = [int(math.floor((hi - lo) / res + 1e-9)) + 1 for lo, hi in bounds]
    # Check the cap before materializing any axis; a single fine axis can
    # already be too large to allocate.
    total = math.prod(counts)
    if total > GRID_POINT_CAP:
        raise GridTooLarge(f"grid has {total} points, above the cap of {GRID_POINT_CAP}")
    return [lo + res * np.arange(count) for (lo, _), count in zip(bounds, counts)]


def brute_force_maximize(space: OutcomeSpace, constraints: ConstraintSet,
                         grid: GridSpec = GridSpec()) -> np.ndarray:
    """Exhaustive growth maximization over a lattice of fraction vectors.

    Infeasible and out-of-domain points are discarded before any logarithm
    is taken. Ties pick the first point in row-major iteration order
    (company 0 varies slowest). Intended for cross-checks only; raises
    :class:`GridTooLarge` beyond ``MAX_GRID_COMPANIES`` companies or
    ``GRID_POINT_CAP`` lattice points.
    """
    n_c = space.num_companies
    if n_c > MAX_GRID_COMPANIES:
        raise GridTooLarge(
            f"grid search supports at most {MAX_GRID_COMPANIES} companies, got {n_c}"
        )
    axes = _axes(grid, constraints, n_c)
    counts = [len(a) for a in axes]
    total = math.prod(counts)

    grads, offs = constraint_matrix(constraints, space)
    rets_t = space.returns.T
    probs = space.probabilities

    block = max(1, int(2_000_000 / max(1, space.num_outcomes)))
    best_value = -np.inf
    best_fractions: np.ndarray | None = None

    for lo in range(0, total, block):
        hi = min(lo + block, total)
        rem = np.arange(lo, hi)
        points = np.empty((hi - lo, n_c))
        for j in reversed(range(n_c)):
            rem, pos = np.divmod(rem, counts[j])
            points[:, j] = axes[j][pos]

        ok = np.ones(hi - lo, dtype=bool)
        if len(constraints):
            ok &= np.all(points @ grads.T + offs <= FEASIBILITY_TOL, axis=1)
        wealth = 1.0 + points @ rets_t
        ok &= np.all(wealth > 0.0, axis=1)
        if not ok.any():
            continue
        values = np.full(hi - lo, -np.inf)
        values[ok] = np.log(wealth[ok]) @ probs
        idx = int(values.argmax())
        if values[idx] > best_value:
            best_value = float(values[idx])
            best_fractions = points[idx].copy()

    if best_fractions is None:
        raise NoViableSolution("no feasible point on the grid")
    return best_fractions


def analytic_kelly_single(gain_probability: float, gain: float, loss: float) -> float:
    """Closed-form optimal fraction for one asset with two outcomes.

    With probability ``p`` the asset returns ``+gain`` and otherwise it
    returns ``-loss`` (both entered as positive magnitudes), the growth
    optimum is ``(p * gain - (1 - p) * loss) / (gain * loss)``.

    >>> analytic_kelly_single(0.5, 1.0, 0.5)
    0.5
    """
    if not 0.0 < gain_probability < 1.0:
        raise ValueError("gain_probability must lie strictly between 0 and 1")
    if not (gain > 0.0 and loss > 0.0):
        raise ValueError("gain and loss must be positive magnitudes")
    q = 1.0 - gain_probability
    return (gain_probability * gain - q * loss) / (gain * loss)


def monte_carlo_growth(f, space: OutcomeSpace, num_paths: int, seed: int) -> float:
    """Sampled estimate of the expected log growth.

    Draws ``num_paths`` outcomes from the exact outcome distribution with a
    seeded PCG64 generator and averages the log wealth factors, so it
    converges to :func:`kellyalloc.model.growth` as paths grow and is
    bit-reproducible for a fixed seed.
    """
    from .model import as_fractions, wealth_factors

    if num_paths < 1:
        raise ValueError("num_paths must be at least 1")
    arr = as_fractions(f, space.num_companies)
    wealth = wealth_factors(arr, space)
    if np.any(wealth <= 0.0):
        from .errors import DomainViolation

        raise DomainViolation("fractions leave the log-growth domain")
    log_wealth = np.log(wealth)
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.choice(space.num_outcomes, size=num_paths, p=space.probabilities)
    return float(np.mean(log_wealth[draws]))
