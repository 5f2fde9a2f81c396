"""Shared helpers for the test suite.

The point of most of these is independence: finite differences, itertools
enumeration, and closed forms that do not reuse the library's own kernels, so
tests corroborate the implementation instead of echoing it.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

import kellyalloc as ka


def coinflip_company(name: str = "flip") -> ka.Company:
    """Even odds of halving or doubling; single-asset optimum is exactly 0.5."""
    return ka.Company(
        name,
        1.0,
        (ka.Scenario("halves", 0.5, 0.5), ka.Scenario("doubles", 2.0, 0.5)),
    )


def mixed_companies() -> list[ka.Company]:
    """Five-company multi-currency portfolio used across the suite."""
    def co(name, currency, cap, rows):
        return ka.Company(
            name,
            cap,
            tuple(ka.Scenario(label, value, prob) for label, value, prob in rows),
            currency=currency,
        )

    return [
        co("A", "USD", 225e9, [("broken", 0.0, 0.05), ("base", 270e9, 0.60), ("strong", 420e9, 0.35)]),
        co("B", "USD", 450e6, [("broken", 0.0, 0.05), ("base", 350e6, 0.50), ("strong", 900e6, 0.45)]),
        co("C", "GBP", 39e6, [("broken", 0.0, 0.10), ("base", 34e6, 0.40), ("strong", 135e6, 0.50)]),
        co("D", "SGD", 751e6, [("weak", 330e6, 0.30), ("base", 1e9, 0.70)]),
        co("E", "HKD", 126e9, [("broken", 0.0, 0.05), ("weak", 50e9, 0.10), ("base", 300e9, 0.85)]),
    ]


def fd_gradient(func, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.size):
        plus = x.copy()
        minus = x.copy()
        plus[j] += h
        minus[j] -= h
        out[j] = (func(plus) - func(minus)) / (2.0 * h)
    return out


def fd_jacobian(vec_func, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    base = np.asarray(vec_func(x), dtype=float)
    out = np.empty((base.size, x.size))
    for j in range(x.size):
        plus = x.copy()
        minus = x.copy()
        plus[j] += h
        minus[j] -= h
        out[:, j] = (np.asarray(vec_func(plus)) - np.asarray(vec_func(minus))) / (2.0 * h)
    return out


def rel_err(candidate: np.ndarray, reference: np.ndarray) -> float:
    """Infinity-norm error of ``candidate`` relative to ``reference``."""
    candidate = np.asarray(candidate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    scale = max(1.0, float(np.max(np.abs(reference))))
    return float(np.max(np.abs(candidate - reference))) / scale


def enumeration_oracle(companies, fractions):
    """Independent statistics via itertools, pure Python floats.

    Returns a dict of the same quantities ``compute_report`` produces,
    derived without NumPy dot products or the library's enumeration. Used to
    pin reported statistics to an independent computation.
    """
    per = []
    for c in companies:
        cap = float(c.market_cap)
        per.append([(s.probability, (s.intrinsic_value - cap) / cap) for s in c.scenarios])
    probs = []
    rets = []
    for combo in itertools.product(*per):
        p = 1.0
        r = 0.0
        for f_j, (p_s, k_s) in zip(fractions, combo):
            p *= p_s
            r += f_j * k_s
        probs.append(p)
        rets.append(r)
    expected = sum(p * r for p, r in zip(probs, rets))
    log_growth = sum(p * math.log(1.0 + r) for p, r in zip(probs, rets))
    worst = min(rets)
    tie_cut = worst + 1e-12 * max(1.0, abs(worst))
    worst_prob = sum(p for p, r in zip(probs, rets) if r <= tie_cut)
    loss_prob = sum(p for p, r in zip(probs, rets) if r < 0.0)

    def exceedance(threshold):
        return sum(p for p, r in zip(probs, rets) if r <= -threshold)

    return {
        "expected_arithmetic_gain": expected,
        "expected_log_growth": log_growth,
        "geometric_gain": math.expm1(log_growth),
        "probability_of_loss": loss_prob,
        "worst_outcome": (worst, worst_prob),
        "exceedance": exceedance,
    }


def random_positive_edge_company(rng: np.random.Generator, name: str) -> ka.Company:
    """Two-outcome company with a clearly positive edge and bounded Kelly.

    Loss magnitudes at least 0.4 and win probability at most 0.65 keep the
    single-asset optimum below 1.5, so grid bounds of [0, 2] always contain
    the unconstrained optimum.
    """
    while True:
        loss = float(rng.uniform(0.4, 0.8))
        gain = float(rng.uniform(0.5, 2.5))
        p_up = float(rng.uniform(0.35, 0.65))
        if p_up * gain - (1.0 - p_up) * loss > 0.02:
            break
    return ka.Company(
        name,
        1.0,
        (
            ka.Scenario("down", 1.0 - loss, 1.0 - p_up),
            ka.Scenario("up", 1.0 + gain, p_up),
        ),
    )


def random_portfolio(rng: np.random.Generator, n_companies: int) -> list[ka.Company]:
    return [random_positive_edge_company(rng, f"r{i}") for i in range(n_companies)]


def single_asset_kelly_inputs(company: ka.Company) -> tuple[float, float, float]:
    """(gain_probability, gain, loss) of a two-outcome company, for the
    closed-form check."""
    (p_down, k_down), (p_up, k_up) = [
        (s.probability, ka.scenario_return(company, i)) for i, s in enumerate(company.scenarios)
    ]
    assert k_down < 0 < k_up
    return p_up, k_up, -k_down


def random_feasible_fractions(rng: np.random.Generator, space, margin: float = 0.3,
                              scale: float | None = None) -> np.ndarray:
    """Non-negative fractions keeping every wealth factor above ``margin``."""
    n_c = space.num_companies
    cap = scale if scale is not None else 1.0 / n_c
    for _ in range(200):
        f = rng.uniform(0.0, cap, size=n_c)
        if np.min(1.0 + space.returns @ f) > margin:
            return f
        cap *= 0.7
    raise AssertionError("could not sample a feasible point")


def solve_select(companies, policy, config=None):
    """End-to-end library run: enumerate, solve, filter, select."""
    config = config or ka.SolverConfig(worker_count=1)
    space = ka.enumerate_outcomes(companies)
    constraints = ka.build_constraint_set(policy, companies)
    candidates = ka.solve_all(space, constraints, config)
    viable = ka.filter_viable(candidates, space, constraints, config)
    selected = ka.select_solution(viable, space, config)
    return space, constraints, candidates, viable, selected
