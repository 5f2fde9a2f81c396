"""Portfolio model: scenarios, companies, and the enumerated outcome space.

Each company is a discrete distribution over intrinsic-value scenarios. The
per-scenario return is ``(intrinsic_value - market_cap) / market_cap``. A
portfolio of companies spans a joint outcome space: the cartesian product of
the per-company scenarios, with outcome probabilities formed as products
(company outcomes are treated as independent). The expected logarithmic
growth of a fraction vector ``f`` over that space,

    G(f) = sum_i p_i * ln(1 + sum_j f_j * k_ij),

is the objective everything downstream maximizes.

Fraction vectors are plain float arrays. They are *domain-valid* when every
outcome keeps its wealth factor ``1 + k_i . f`` strictly positive; functions
that need the logarithm raise :class:`DomainViolation` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field
from functools import reduce

import numpy as np

from ._backend import kernels
from .errors import DomainViolation, OutcomeExplosion, ValidationError

#: Refuse to enumerate joint outcome spaces larger than this by default.
DEFAULT_OUTCOME_CAP = 10_000_000

#: Scenario probabilities of a company must sum to one within this tolerance.
PROBABILITY_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Scenario:
    """One possible end state for a company.

    Parameters
    ----------
    label:
        Free-text description ("total loss", "base case", ...).
    intrinsic_value:
        Estimated value of the whole company in this scenario, in the same
        currency unit as the company's market capitalization. Non-negative.
    probability:
        Probability assigned to this scenario, in (0, 1].
    """

    label: str
    intrinsic_value: float
    probability: float

    def __post_init__(self):
        if not isinstance(self.label, str):
            raise ValidationError(f"scenario label must be text, got {type(self.label).__name__}")
        iv = self.intrinsic_value
        if not (isinstance(iv, (int, float)) and math.isfinite(iv)) or iv < 0:
            raise ValidationError(f"scenario {self.label!r}: intrinsic_value must be finite and >= 0, got {iv!r}")
        p = self.probability
        if not (isinstance(p, (int, float)) and math.isfinite(p)) or not (0.0 < p <= 1.0):
            raise ValidationError(f"scenario {self.label!r}: probability must lie in (0, 1], got {p!r}")


@dataclass(frozen=True)
class Company:
    """A company with a market price and a discrete intrinsic-value distribution.

    Scenario probabilities must sum to one (within ``PROBABILITY_SUM_TOL``;
    nothing is renormalized). At least one scenario must price the company
    below its market cap: an asset with no modeled downside makes the log
    growth unbounded and the allocation meaningless. Pass
    ``require_downside=False`` to override that check deliberately.
    """

    name: str
    market_cap: float
    scenarios: tuple[Scenario, ...]
    currency: str = ""
    require_downside: InitVar[bool] = True

    def __post_init__(self, require_downside: bool):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("company name must be non-empty text")
        if not isinstance(self.currency, str):
            raise ValidationError(f"company {self.name!r}: currency must be text")
        mc = self.market_cap
        if not (isinstance(mc, (int, float)) and math.isfinite(mc)) or mc <= 0:
            raise ValidationError(f"company {self.name!r}: market_cap must be finite and > 0, got {mc!r}")
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.scenarios:
            raise ValidationError(f"company {self.name!r}: needs at least one scenario")
        for s in self.scenarios:
            if not isinstance(s, Scenario):
                raise ValidationError(f"company {self.name!r}: scenarios must be Scenario instances")
        total = math.fsum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise ValidationError(
                f"company {self.name!r}: scenario probabilities sum to {total!r}, expected 1"
            )
        if require_downside and not any(s.intrinsic_value < mc for s in self.scenarios):
            raise ValidationError(
                f"company {self.name!r}: no scenario prices it below market cap; "
                "an asset without downside has no finite optimal fraction "
                "(use require_downside=False / --allow-no-downside to override)"
            )

    def scenario_returns(self) -> np.ndarray:
        """Per-scenario returns ``(V - M) / M`` as a float array."""
        mc = float(self.market_cap)
        return np.array([(s.intrinsic_value - mc) / mc for s in self.scenarios], dtype=float)

    def scenario_probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios], dtype=float)


def scenario_return(company: Company, scenario_index: int) -> float:
    """Return of ``company`` in one scenario: ``(V - M) / M``.

    >>> c = Company("demo", 100.0, (Scenario("down", 50.0, 0.5), Scenario("up", 200.0, 0.5)))
    >>> scenario_return(c, 0)
    -0.5
    """
    s = company.scenarios[scenario_index]
    return (s.intrinsic_value - company.market_cap) / company.market_cap


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class OutcomeSpace:
    """Joint outcome space of a portfolio, immutable after construction.

    ``returns`` has one row per joint outcome and one column per company;
    ``probabilities`` holds the product probability of each row. The
    per-company marginal scenario data is kept alongside because some
    constraints (maximum acceptable loss) are defined on individual company
    scenarios, not on joint outcomes.

    Outcome ordering: company 0 varies slowest, the last company fastest
    (C order of the cartesian product).
    """

    num_companies: int
    probabilities: np.ndarray
    returns: np.ndarray
    scenario_probabilities: tuple[np.ndarray, ...] = field(repr=False)
    scenario_returns: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        probs = self.probabilities
        rets = self.returns
        if rets.ndim != 2 or probs.ndim != 1 or rets.shape[0] != probs.shape[0]:
            raise ValidationError("outcome space arrays are inconsistent")
        if rets.shape[1] != self.num_companies:
            raise ValidationError("returns must have one column per company")
        if probs.shape[0] == 0 or np.any(probs <= 0.0):
            raise ValidationError("every outcome needs a positive probability")
        if abs(math.fsum(probs.tolist()) - 1.0) > PROBABILITY_SUM_TOL:
            raise ValidationError("outcome probabilities must sum to 1")
        if rets.size and float(rets.min()) < -1.0:
            raise ValidationError("scenario returns cannot lose more than the full position")
        _readonly(probs)
        _readonly(rets)
        for arr in (*self.scenario_probabilities, *self.scenario_returns):
            _readonly(arr)

    @property
    def num_outcomes(self) -> int:
        return int(self.probabilities.shape[0])

    def iter_outcomes(self):
        """Yield ``(probability, returns_row)`` pairs in outcome order."""
        for i in range(self.num_outcomes):
            yield float(self.probabilities[i]), self.returns[i]


def enumerate_outcomes(companies, max_outcomes: int = DEFAULT_OUTCOME_CAP) -> OutcomeSpace:
    """Build the joint outcome space of a list of companies.

    Probabilities multiply across companies (independence); returns line up
    per company. Raises :class:`OutcomeExplosion` when the cartesian product
    would exceed ``max_outcomes`` rows, before allocating anything large.

    >>> c = Company("demo", 100.0, (Scenario("down", 50.0, 0.5), Scenario("up", 200.0, 0.5)))
    >>> space = enumerate_outcomes([c, c])
    >>> space.num_outcomes
    4
    >>> space.probabilities.tolist()
    [0.25, 0.25, 0.25, 0.25]
    """
    companies = list(companies)
    if not companies:
        raise ValidationError("portfolio needs at least one company")
    counts = [len(c.scenarios) for c in companies]
    total = math.prod(counts)
    if total > max_outcomes:
        raise OutcomeExplosion(
            f"joint outcome space has {total} outcomes, above the cap of {max_outcomes}"
        )

    per_probs = [c.scenario_probabilities() for c in companies]
    per_rets = [c.scenario_returns() for c in companies]

    probabilities = reduce(np.multiply.outer, per_probs).reshape(total)

    n_c = len(companies)
    returns = np.empty((total, n_c), dtype=float)
    before = 1
    for j in range(n_c):
        after = total // (before * counts[j])
        returns[:, j] = np.tile(np.repeat(per_rets[j], after), before)
        before *= counts[j]

    return OutcomeSpace(
        num_companies=n_c,
        probabilities=probabilities,
        returns=returns,
        scenario_probabilities=tuple(per_probs),
        scenario_returns=tuple(per_rets),
    )


def as_fractions(f, num_companies: int) -> np.ndarray:
    """Coerce ``f`` to a validated float fraction vector."""
    arr = np.ascontiguousarray(f, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != num_companies:
        raise ValueError(f"expected a fraction vector of length {num_companies}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("fraction vector must be finite")
    return arr


def wealth_factors(f, space: OutcomeSpace) -> np.ndarray:
    """Per-outcome wealth factors ``1 + k_i . f``."""
    arr = as_fractions(f, space.num_companies)
    return 1.0 + space.returns @ arr


def _require_domain(f: np.ndarray, space: OutcomeSpace) -> None:
    w = 1.0 + space.returns @ f
    worst = float(w.min())
    if worst <= 0.0:
        raise DomainViolation(
            f"fractions drive outcome {int(w.argmin())} to wealth factor {worst:.6g}; "
            "log growth is undefined there"
        )


def growth(f, space: OutcomeSpace) -> float:
    """Expected logarithmic growth G(f) over the outcome space.

    Raises
    ------
    DomainViolation
        If any outcome's wealth factor ``1 + k_i . f`` is not strictly
        positive.
    """
    arr = as_fractions(f, space.num_companies)
    _require_domain(arr, space)
    return float(kernels().growth_value(space.probabilities, space.returns, arr))


def growth_gradient(f, space: OutcomeSpace) -> np.ndarray:
    """Gradient of G: component j is ``sum_i p_i k_ij / (1 + k_i . f)``."""
    arr = as_fractions(f, space.num_companies)
    _require_domain(arr, space)
    return np.asarray(kernels().growth_gradient(space.probabilities, space.returns, arr))


def growth_hessian(f, space: OutcomeSpace) -> np.ndarray:
    """Hessian of G: entry (j, l) is ``-sum_i p_i k_ij k_il / (1 + k_i . f)^2``.

    Symmetric by construction and negative semidefinite on the domain, which
    is what makes the stationary point of each constraint combination unique.
    """
    arr = as_fractions(f, space.num_companies)
    _require_domain(arr, space)
    return np.asarray(kernels().growth_hessian(space.probabilities, space.returns, arr))
